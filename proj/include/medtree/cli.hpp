#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace medtree
{

inline constexpr const char* output_dir_env = "MEDTREE_OUTPUT_DIR";

enum class ExperimentKind
{
    simulate,
    commutation,
    theta,
    alpha,
    trace,
    resample,
    chains,
    audit,
    tailcheck,
    neverflip
};

std::string to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_kind(const std::string& text);
const std::vector<std::string>& experiment_kinds();

/*!
 * Validated experiment configuration. Fields a config leaves unset take
 * the defaults of its kind when the experiment runs.
 */
struct ExperimentConfig
{
    ExperimentKind kind = ExperimentKind::simulate;
    std::uint64_t seed = 1;
    std::uint64_t replicas = 1;
    int radius = 8;
    double horizon = 4;
    double p = 0.5;
    std::vector<double> p_grid;
    int depth = 8;
    std::vector<int> distances;
    int window = 4;
    double epsilon = 0.01;
    int k = 20;
    std::vector<int> schedule;
    std::vector<double> times;
    std::string boundary = "frozen_initial";
    std::string mode = "median";
    bool resample_clock = false;
    double max_undetermined = 0.25;

    std::set<std::string> explicit_keys;
    bool has(const std::string& key) const
    {
        return explicit_keys.count(key) > 0;
    }
};

class ConfigError : public std::runtime_error
{
  public:
    explicit ConfigError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const { return errors_; }

  private:
    std::vector<std::string> errors_;
};

// Line-oriented key=value text with '#' comments. Throws ConfigError
// listing every problem found.
ExperimentConfig parse_config(const std::string& text);

// Applies one key=value override on top of a parsed config.
void apply_override(ExperimentConfig& config, const std::string& key,
                    const std::string& value);

const std::vector<std::string>& config_keys();

struct RunResult
{
    int exit_code = 0;  // 0 ok, 1 operational error, 2 invariant violated
    std::vector<std::filesystem::path> files;
    std::string summary;  // one line for the terminal
};

// Runs the experiment and writes its CSV files and manifest.json into
// out_dir (created if needed).
RunResult run_experiment(const ExperimentConfig& config,
                         const std::filesystem::path& out_dir);

// MEDTREE_OUTPUT_DIR, else ./medtree-out
std::filesystem::path default_output_dir();

}  // namespace medtree
