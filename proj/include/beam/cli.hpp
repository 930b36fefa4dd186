#pragma once

// Command-line surface: `fit`, `simulate` and `bench`.
//
// Exit codes: 0 ok, 2 input error, 3 configuration error, 4 numerical error.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "beam/inference.hpp"
#include "beam/simulate.hpp"
#include "beam/table_io.hpp"

namespace beam::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitNumerical = 4;

struct RunConfig {
  std::string input_path;
  Delimiter delimiter = Delimiter::automatic;
  std::optional<bool> has_header;
  bool transpose = false;
  /// "identity", "scaled:<tau>" or "file:<path>".
  std::string prior = "identity";
  std::optional<double> delta_override;
  bool marginal = false;
  bool conditional = true;
  AdjustmentMethod adjustment = AdjustmentMethod::bonferroni;
  double level = 0.1;
  std::string output_dir = ".";
  /// 0: BEAM_THREADS, else the OpenMP default.
  int threads = 0;
  bool streaming = false;
  std::optional<std::uint64_t> seed;
};

int cmd_fit(const RunConfig& config);

struct SimulateConfig {
  SimScenario scenario;
  std::string output_dir = ".";
};

int cmd_simulate(const SimulateConfig& config);

struct BenchConfig {
  SimScenario scenario;
  int replicates = 50;
  std::string output_dir = ".";
  int threads = 0;
};

int cmd_bench(const BenchConfig& config);

/// Scenario manifest (JSON) round trip.
std::string scenario_to_json(const SimScenario& scenario);
SimScenario scenario_from_json(const std::string& text);

/// Resolves 0 to $BEAM_THREADS or the OpenMP default.
int resolve_threads(int requested);

/// Parses argv and dispatches; never throws.
int run(int argc, const char* const* argv);

}  // namespace beam::cli
