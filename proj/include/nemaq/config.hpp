// Experiment configuration: a small INI dialect with strict key checking.
//
// Sections and keys (all optional, defaults in parentheses):
//
//   [grid]     n (32), box_length (6.283185307179586)
//   [params]   a (-0.2), b (1), c (1), L1 (1), L2 (0.5), L3 (0.5), L4 (0.3),
//              mu (1), gamma (1)
//   [solver]   scheme (explicit_rk4 | imex), dt (1e-3), t_end (1),
//              mollifier_n (unset), snapshot_every (1)
//   [initial]  kind (random | zero | single_mode | uniaxial | file),
//              seed (1) and decay (3) for random, s (0.5) and axis (2) for
//              uniaxial, path for file; the default kind is random so that
//              the verification suites run against nonzero data out of the box
//   [output]   directory ("."), csv (true), snapshots (false)
//
// Lines are `key = value`; blank lines and lines starting with '#' or ';'
// are ignored. Unknown sections or keys are errors, as are keys that do not
// apply to the selected initial kind. Parsing collects every violation
// before reporting, so one round trip shows all problems.

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "nemaq/dynamics.hpp"
#include "nemaq/energy.hpp"
#include "nemaq/spectral.hpp"

namespace nemaq {

inline constexpr const char* kVersion = "0.1.0";

enum class InitialKind { zero, single_mode, random_field, uniaxial, file };

struct InitialData {
    InitialKind kind = InitialKind::random_field;
    unsigned seed = 1;      // random
    double decay = 3.0;     // random: spectral decay exponent
    double s = 0.5;         // uniaxial: scalar order parameter
    int axis = 2;           // uniaxial: director axis, 0..2
    std::string path;       // file
};

struct OutputOptions {
    std::string directory = ".";
    bool csv = true;
    bool snapshots = false;
};

struct ExperimentConfig {
    int n = 32;
    double box_length = kTwoPi;
    MaterialParams params;
    SolverConfig solver;
    InitialData initial;
    OutputOptions output;
};

// Carries every violation found in one parse.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const { return violations_; }

private:
    std::vector<std::string> violations_;
};

ExperimentConfig parse_config(const std::string& text);

// FNV-1a 64-bit hash of the raw configuration text, as 16 lowercase hex
// digits. Stable across runs and platforms; used in reproducibility lines.
std::string config_fingerprint(const std::string& text);

// Materializes the configured initial data on the grid. Random fields are
// band-limited draws normalized to unit L2 norm; single_mode is a wavenumber-1
// cosine in the q12 component with amplitude 0.2 and zero velocity; uniaxial
// is the homogeneous state s (n x n - I/3) with n along the chosen axis.
// file delegates to load_state and checks the grid matches.
SimState build_initial_state(const SpectralGrid& g, const InitialData& init);

}  // namespace nemaq
