#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sphereflow/analysis.hpp"
#include "sphereflow/dynamics.hpp"
#include "sphereflow/tomlmini.hpp"

namespace sphereflow::run {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 1 acceptance failure, 2 config error, 3 runtime error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitAcceptance = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

std::string fnv1a_hex(const std::string& text);

// Honors SPHEREFLOW_THREADS when OpenMP is active.
void apply_thread_env();

enum class InitKind {
    Example21,
    Example24,
    Example26Density,
    Example26Particles,
    Uniform,
    CapUniform,
    Tilted,
    JsonFile,
    CsvFile,
};

struct ScenarioConfig {
    std::string scenario;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool randomized_init = false;

    KernelSpec kernel;
    double beta = 0.0;  // convenience copy for circle scenarios

    InitKind init = InitKind::Uniform;
    int n = 0;
    int d = 2;
    int grid_n = 0;           // circle grid
    double xi = 0.0, eta = 0.0, eps = 0.0, alpha_init = 0.0, tilt = 0.0;
    std::string init_path;

    IntegratorConfig integrator;
    CircleSolverConfig circle;

    int cadence = 1;
    std::optional<double> obs_alpha;
    std::optional<std::pair<double, double>> xi_angles;
    bool with_q_rate = false;
    bool with_energy = true;
    bool w2_to_final_mean = false;
    int checkpoint_every = 0;

    std::vector<std::string> monitors;
    std::string out_dir = "out";

    std::string config_text;  // raw bytes, hashed into every output
    std::string config_hash;
};

ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config_file(const std::string& path);

struct RunOutputs {
    TrajectoryRecord record;
    std::vector<InequalityVerdict> verdicts;
    std::string summary_json;
    int exit_code = kExitOk;
};

RunOutputs run_scenario(const ScenarioConfig& cfg);
void write_outputs(const ScenarioConfig& cfg, const RunOutputs& out,
                   const std::string& out_dir);

// Trajectory-level monitors shared by simulate, check and reproduce.
void append_sandwich_verdicts(const TrajectoryRecord& rec, double eps_phi,
                              std::vector<InequalityVerdict>& out);
void append_gronwall_verdicts(const TrajectoryRecord& rec, double eps_phi, int d,
                              std::vector<InequalityVerdict>& out);

int cmd_simulate(const std::string& config_path, const std::string& out_override);

// Canonical reproductions with their acceptance thresholds baked in.
struct ReportLine {
    std::string name;
    bool pass = false;
    std::string detail;
};
struct Report {
    std::string title;
    std::vector<ReportLine> lines;
    bool all_pass() const {
        for (const auto& l : lines)
            if (!l.pass) return false;
        return true;
    }
};

Report reproduce(const std::string& name);  // throws ConfigError for unknown names
int cmd_reproduce(const std::string& name, const std::string& out_dir);

Report run_check_suite(const std::string& suite, std::uint64_t seed);
int cmd_check(const std::string& suite, std::uint64_t seed, const std::string& out_path);

// Exponential-rate fit of W2(mu_t, delta_x_inf) for synchronizing runs. The
// burn-in starts once every atom sits within pi/4 of the limit point (uniform
// contraction from there on) and the window ends before the W2 values reach
// the accuracy floor of the estimated limit point.
struct W2Fit {
    RateFit fit;
    double burn_in = 0.0;
    int points = 0;
};
W2Fit fit_synchronization_rate(const std::vector<double>& times,
                               const std::vector<ParticleEnsemble>& snaps,
                               std::span<const double> x_inf,
                               double floor_w2 = 1e-7);

std::string report_to_json(const Report& r, std::uint64_t seed, const std::string& hash_src);

}  // namespace sphereflow::run
