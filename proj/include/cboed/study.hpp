#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cboed/density.hpp"
#include "cboed/model.hpp"
#include "cboed/oed.hpp"
#include "cboed/parallel.hpp"

namespace cboed {

using Json = nlohmann::ordered_json;

// Names accepted by make_model, in listing order.
const std::vector<std::string>& builtin_models();

// Builds a model from its name and a params object. Sensor models take
// their sensors from `sensors` when given, otherwise from params.sensors.
// Throws ValidationError with fields under "model.params".
std::unique_ptr<ForwardModel> make_model(const std::string& name, const Json& params,
                                         const std::vector<std::array<double, 2>>* sensors = nullptr);

enum class Command { kEig, kOed, kInfer, kPushforward, kModels };
const char* to_string(Command c);

struct DesignsSpec {
  std::string type;  // grid, random, file or qoi_sets
  std::size_t nx = 0, ny = 0;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::string path;
  std::vector<std::vector<std::size_t>> sets;
  // Resolved at load time.
  std::vector<std::array<double, 2>> sensors;
};

struct StudyConfig {
  Command command = Command::kEig;
  std::string model_name;
  Json model_params = Json::object();
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
  std::size_t m_centers = 0;
  std::optional<NoiseModel> noise;
  std::optional<DesignsSpec> designs;
  std::string oed_mode = "exhaustive";
  std::size_t oed_k = 1;
  BandwidthRule bandwidth = BandwidthRule::silverman();
  double floor = 1e-12;
  struct Observation {
    std::size_t design = 0;
    std::vector<double> center;
    std::vector<double> sigma;
  };
  std::optional<Observation> observation;
  std::size_t pushforward_design = 0;
  std::size_t pushforward_grid = 200;
  std::string output;

  // Fully defaulted config as JSON, without the output path.
  Json effective() const;
};

// Validates everything that can be checked without sampling.
// Throws ParseError(line) and ValidationError(field, reason).
StudyConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
StudyConfig load_config(const std::filesystem::path& path);

// Design candidates named by the config, with ids in order.
DesignSpace build_design_space(const StudyConfig& config, const ForwardModel& model);

struct RunOptions {
  Parallelism parallelism{0};
  std::optional<std::string> output;  // overrides config.output
  bool quiet = false;
};

// Runs the configured command and writes its report files. Returns 0 on
// success, 1 for validation errors and 2 for computation errors; messages go
// to `err`.
int run_study(const std::filesystem::path& config_path, const RunOptions& options, std::ostream& out,
              std::ostream& err);
int run_command(const StudyConfig& config, const RunOptions& options, std::ostream& out, std::ostream& err);

// Report CSV: design_id, coord columns, eig, n_infeasible, status.
std::string report_csv(const EigReport& report);
std::string format_g6(double v);

}  // namespace cboed
