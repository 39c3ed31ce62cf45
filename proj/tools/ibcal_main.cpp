#include "ibcal/cli.hpp"

int main(int argc, char** argv) { return ibcal::cli::run(argc, argv); }
