#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ibcal/harness.hpp"
#include "ibcal/prob.hpp"
#include "ibcal/select.hpp"

namespace ibcal::io {

// Header block stamped into every artifact: tool version, configured unit,
// a hash of the generating configuration, and the seeds that produced it.
struct FileMeta {
    LogUnit unit = LogUnit::Nats;
    std::uint64_t config_hash = 0;
    std::vector<std::pair<std::string, std::uint64_t>> seeds;
};

// FNV-1a over a canonical string form of the configuration.
std::uint64_t hash_bytes(std::string_view bytes);

// Doubles serialized so that they parse back bit-identically (>= 17
// significant digits, '.' decimal separator).
std::string fmt_double(double v);
double parse_double(std::string_view s, const std::string& context);

// ---- source PMF ----
void write_pmf_csv(const std::filesystem::path& path, const JointPMF& pmf,
                   const FileMeta& meta);
JointPMF load_pmf_csv(const std::filesystem::path& path);

// Accepts either a CSV probability matrix or a JSON source descriptor
// ({"kind": "dsbs"|"dirichlet"|"matrix", ...}); sniffs the content.
JointPMF load_source(const std::filesystem::path& path);

SourceSpec source_spec_from_json_text(const std::string& text);

// ---- sample sets ----
void write_samples_csv(const std::filesystem::path& path, const SampleSet& samples,
                       const FileMeta& meta);
SampleSet load_samples_csv(const std::filesystem::path& path);

// ---- encoder grids ----
void write_encoder_grid(const std::filesystem::path& path,
                        std::span<const Encoder> encoders, const std::string& provenance,
                        const FileMeta& meta);
struct EncoderGridFile {
    std::vector<Encoder> encoders;
    std::string provenance;
    LogUnit unit = LogUnit::Nats;
};
EncoderGridFile load_encoder_grid(const std::filesystem::path& path);

// ---- selection outcomes ----
void write_outcome_json(const std::filesystem::path& path, const SelectionOutcome& outcome,
                        const ConventionalResult* baseline, const FileMeta& meta);
void write_candidates_csv(const std::filesystem::path& path,
                          const SelectionOutcome& outcome, const FileMeta& meta);

// ---- experiment artifacts ----
void write_trials_csv(const std::filesystem::path& path,
                      std::span<const TrialRecord> records, const FileMeta& meta);
std::vector<TrialRecord> load_trials_csv(const std::filesystem::path& path);

void write_summary_json(const std::filesystem::path& path, const SummaryStats& summary,
                        TrialMode mode, std::uint64_t master_seed, const FileMeta& meta);
SummaryStats load_summary_json(const std::filesystem::path& path);

void write_scatter_csv(const std::filesystem::path& path,
                       std::span<const TrialRecord> records, const FileMeta& meta);

// ---- run configuration ----
struct RunConfig {
    ExperimentConfig experiment;
    std::filesystem::path out_dir = "out";
    unsigned workers = 0;  // 0 -> available parallelism
    std::uint64_t config_hash = 0;
};

RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json_text(const RunConfig& config);

// Hash of the experiment-defining fields only; worker counts and output
// paths do not change results, so they do not change the hash either.
std::uint64_t config_hash(const ExperimentConfig& config);

std::string render_summary_table(const SummaryStats& summary);

}  // namespace ibcal::io
