#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace ibcal::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;     // config, schema, or validation failure
inline constexpr int kExitNumerical = 3;  // non-finite values inside a solver
inline constexpr int kExitAbstain = 4;    // selection produced no candidate

struct GenSourceOptions {
    std::string kind;
    std::optional<double> p;
    std::optional<std::string> sizes;  // "8,4"
    double concentration = 1.0;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> matrix;
    std::filesystem::path out;
    std::string unit = "nats";
};
int cmd_gen_source(const GenSourceOptions& opt);

struct GenSamplesOptions {
    std::filesystem::path source;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::filesystem::path out;
    std::string unit = "nats";
};
int cmd_gen_samples(const GenSamplesOptions& opt);

struct TrainGridOptions {
    std::filesystem::path source;
    std::string variant = "classical";
    std::optional<std::string> grid;        // classical / ibkd lambda axis
    std::optional<std::string> gamma_grid;  // deterministic axes
    std::optional<std::string> beta_grid;
    std::size_t t_size = 2;
    std::size_t max_iters = 2000;
    double conv_tol = 1e-8;
    std::size_t restarts = 5;
    double init_concentration = 1.0;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    std::filesystem::path out;
    std::string unit = "nats";
};
int cmd_train_grid(const TrainGridOptions& opt);

struct CalibrateOptions {
    std::filesystem::path source;
    std::filesystem::path grid;
    std::filesystem::path opt_samples;
    std::filesystem::path mht_samples;
    double alpha = 0.0;
    double delta = 0.1;
    std::uint64_t seed = 0;
    std::filesystem::path out;
    std::optional<std::filesystem::path> csv;
    std::optional<std::string> baseline;  // "conventional"
    std::string unit = "nats";
};
int cmd_calibrate(const CalibrateOptions& opt);

struct SimulateOptions {
    std::filesystem::path config;
    std::optional<std::size_t> trials;
    std::optional<std::string> mode;
    std::optional<unsigned> workers;
    std::optional<std::filesystem::path> out_dir;
    bool quiet = false;
};
int cmd_simulate(const SimulateOptions& opt);

struct ReportOptions {
    std::filesystem::path trials;
    std::optional<std::filesystem::path> summary;
};
int cmd_report(const ReportOptions& opt);

// Full argv entry point; maps toolkit errors onto the exit codes above.
int run(int argc, char** argv);

}  // namespace ibcal::cli
