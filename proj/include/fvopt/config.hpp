#pragma once

// JSON experiment configuration. Every key is optional; missing keys keep the defaults of
// ExperimentSpec / HittingConfig. Unknown keys are rejected with ConfigError.

#include <iosfwd>
#include <string>

#include "fvopt/bench.hpp"

namespace fvopt {

struct BenchConfig {
  ExperimentSpec experiment;
  HittingConfig hitting;
};

BenchConfig parse_config(std::istream& in);
BenchConfig load_config(const std::string& path);
std::string dump_config(const BenchConfig& cfg);

}  // namespace fvopt
