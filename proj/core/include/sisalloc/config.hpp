#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "sisalloc/costs.hpp"
#include "sisalloc/dadmm.hpp"

namespace sisalloc {

enum class GraphSource { Random, File };
enum class BoundsMode { Explicit, Recipe };

/// Everything needed to reproduce one experiment. Serialized as INI text
/// with sections [graph] [bounds] [problem] [dadmm] [simulation] [output].
struct ExperimentConfig {
    // [graph]
    GraphSource graph_source = GraphSource::Random;
    std::string graph_file;
    int n = 8;
    double edge_prob = 0.32;
    std::uint64_t graph_seed = 1;
    double weight_lo = 1.0;
    double weight_hi = 1.0;

    // [bounds]
    BoundsMode bounds_mode = BoundsMode::Recipe;
    double beta_lo = 0.0;  ///< explicit mode only
    double beta_hi = 0.0;  ///< explicit mode only
    double delta_lo = 0.025;
    double delta_hi = 0.75;
    /// recipe: tau_c = tau_numerator / rho(A), beta_hi = beta_hi_mult * tau_c,
    /// beta_lo = beta_lo_frac * beta_hi
    double tau_numerator = 0.2;
    double beta_hi_mult = 4.0;
    double beta_lo_frac = 0.3;

    // [problem]
    double eps_bar = 0.2;
    CostKind cost = CostKind::NormalizedQuasiconvex;

    // [dadmm]
    double rho = 4.0;
    double eta = 1e-4;
    int max_iter = 2000;
    PenaltyDomain penalty = PenaltyDomain::Log;
    int threads = 1;
    bool random_init = false;
    std::uint64_t dadmm_seed = 0;

    // [simulation]
    double horizon = 50.0;
    double dt = 1e-2;
    double p0 = 0.1;
    int mc_trials = 200;
    double mc_horizon = 20.0;
    double mc_dt = 1e-2;
    std::uint64_t mc_seed = 7;

    // [output]
    std::string out_dir = "out";

    /// Range checks plus "the graph file exists" for file sources.
    void validate() const;
    bool operator==(const ExperimentConfig&) const = default;
};

std::string to_string(GraphSource s);
std::string to_string(BoundsMode m);

/// Strict: unknown sections or keys and malformed values throw IoError.
/// Missing keys keep their defaults.
ExperimentConfig parse_config(std::istream& is);
ExperimentConfig load_config(const std::string& path);

/// Every key, fixed order, shortest round-trip number formatting.
void write_config(std::ostream& os, const ExperimentConfig& cfg);
std::string serialize_config(const ExperimentConfig& cfg);

/// FNV-1a of the serialized form without the output directory, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

} // namespace sisalloc
