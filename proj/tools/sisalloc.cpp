#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "sisalloc/centralized.hpp"
#include "sisalloc/config.hpp"
#include "sisalloc/dadmm.hpp"
#include "sisalloc/errors.hpp"
#include "sisalloc/experiment.hpp"
#include "sisalloc/io.hpp"
#include "sisalloc/spectral.hpp"

namespace fs = std::filesystem;
using namespace sisalloc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitError = 2;

struct Common {
    std::string config_path;
    std::string out;
};

ExperimentConfig read_config(const Common& c)
{
    ExperimentConfig cfg = c.config_path.empty() ? ExperimentConfig{} : load_config(c.config_path);
    if (!c.out.empty())
        cfg.out_dir = c.out;
    cfg.validate();
    return cfg;
}

std::ofstream open_output(const ExperimentConfig& cfg, const std::string& name,
                          const std::string& hash)
{
    fs::create_directories(cfg.out_dir);
    const fs::path path = fs::path(cfg.out_dir) / name;
    std::ofstream os(path);
    if (!os)
        throw IoError("cannot write " + path.string());
    os << "# config_hash=" << hash << '\n';
    return os;
}

void print_summary(std::ostream& os, const std::string& mode, const Allocation& a,
                   const AllocationProblem& prob)
{
    os << "mode=" << mode << " n=" << prob.size() << " total_cost=" << format_number(a.total_cost)
       << " abscissa=" << format_number(a.abscissa) << " eps_bar=" << format_number(prob.eps_bar)
       << " feasible=" << (a.abscissa <= -prob.eps_bar + 1e-4 ? "yes" : "no") << '\n';
}

int cmd_gen(const Common& c)
{
    const ExperimentConfig cfg = read_config(c);
    const DirectedGraph g = make_graph(cfg);
    const fs::path path = fs::path(cfg.out_dir) / "graph.txt";
    {
        auto os = open_output(cfg, "graph.txt", config_hash(cfg));
        write_edge_list(os, g);
    }
    std::cout << "n=" << g.size() << " edges=" << g.edge_count()
              << " spectral_radius=" << format_number(spectral_radius(g.weights()))
              << " file=" << path.string() << '\n';
    return kExitOk;
}

Allocation run_central(const AllocationProblem& prob, const ExperimentConfig& cfg,
                       const std::string& hash)
{
    const Allocation a = solve_centralized(prob);
    auto os = open_output(cfg, "allocation_central.csv", hash);
    write_allocation_csv(os, a, prob);
    return a;
}

int cmd_solve(const Common& c, const std::string& mode, const std::string& reference)
{
    const ExperimentConfig cfg = read_config(c);
    const std::string hash = config_hash(cfg);
    const AllocationProblem prob = make_problem(cfg, make_graph(cfg));

    if (mode == "central") {
        const Allocation a = run_central(prob, cfg, hash);
        print_summary(std::cout, "central", a, prob);
        return kExitOk;
    }

    DadmmOptions opts = make_dadmm_options(cfg);
    if (reference == "central") {
        const Allocation ref = run_central(prob, cfg, hash);
        opts.reference_cost = ref.total_cost;
        std::cout << "reference_cost=" << format_number(ref.total_cost) << '\n';
    }
    const DadmmResult res = run_dadmm(prob, opts);
    {
        auto os = open_output(cfg, "allocation_dadmm.csv", hash);
        write_allocation_csv(os, res.allocation, prob);
    }
    {
        auto os = open_output(cfg, "trace_dadmm.csv", hash);
        write_trace_csv(os, res.trace, opts.reference_cost.has_value());
    }
    const auto& last = res.trace.records.back();
    print_summary(std::cout, "dadmm", res.allocation, prob);
    std::cout << "rounds=" << last.iter << " converged=" << (res.trace.converged ? "yes" : "no")
              << " consensus_residual=" << format_number(last.consensus_residual)
              << " max_dual_step=" << format_number(last.max_dual_step);
    if (opts.reference_cost)
        std::cout << " relative_gap="
                  << format_number(last.gap / *opts.reference_cost);
    std::cout << '\n';
    return kExitOk;
}

int cmd_verify(const Common& c, const std::string& allocation_path, bool monte_carlo)
{
    const ExperimentConfig cfg = read_config(c);
    const std::string hash = config_hash(cfg);
    const AllocationProblem prob = make_problem(cfg, make_graph(cfg));
    std::ifstream in(allocation_path);
    if (!in)
        throw IoError("cannot open allocation '" + allocation_path + "'");
    Allocation a = read_allocation_csv(in);
    if (a.beta.size() != prob.size())
        throw DomainError("allocation has " + std::to_string(a.beta.size()) + " nodes, graph has "
                          + std::to_string(prob.size()));
    a.abscissa = spectral_abscissa(prob.graph, a.beta, a.delta);

    const VerifyOutcome v = verify_allocation(prob, a, cfg, monte_carlo);
    {
        auto os = open_output(cfg, "mean_field.csv", hash);
        write_trajectory_csv(os, v.mean_field);
    }
    if (v.monte_carlo) {
        auto os = open_output(cfg, "monte_carlo.csv", hash);
        write_trajectory_csv(os, *v.monte_carlo);
    }
    std::cout << "abscissa=" << format_number(a.abscissa)
              << " decay_rate=" << format_number(v.decay.achieved_rate)
              << " required=" << format_number(0.95 * prob.eps_bar)
              << " samples=" << v.decay.samples << " decay=" << (v.decay.pass ? "pass" : "fail");
    if (v.monte_carlo)
        std::cout << " mc_max_excess_se=" << format_number(v.mc_max_excess)
                  << " monte_carlo=" << (v.mc_pass ? "pass" : "fail");
    std::cout << '\n';
    return v.decay.pass && v.mc_pass ? kExitOk : kExitInfeasible;
}

int cmd_corners(const Common& c)
{
    const ExperimentConfig cfg = read_config(c);
    const AllocationProblem prob = make_problem(cfg, make_graph(cfg));
    const auto& b = prob.bounds()[0];
    std::cout << "# beta_lo=" << format_number(b.beta_lo) << " beta_hi=" << format_number(b.beta_hi)
              << " delta_lo=" << format_number(b.delta_lo)
              << " delta_hi=" << format_number(b.delta_hi) << '\n';
    print_corner_report(std::cout, feasibility_report(prob), prob.eps_bar);
    return kExitOk;
}

int cmd_compare(const Common& c)
{
    const ExperimentConfig cfg = read_config(c);
    const std::string hash = config_hash(cfg);
    const AllocationProblem prob = make_problem(cfg, make_graph(cfg));
    const Allocation central = run_central(prob, cfg, hash);
    DadmmOptions opts = make_dadmm_options(cfg);
    opts.reference_cost = central.total_cost;
    const DadmmResult res = run_dadmm(prob, opts);
    {
        auto os = open_output(cfg, "allocation_dadmm.csv", hash);
        write_allocation_csv(os, res.allocation, prob);
    }
    {
        auto os = open_output(cfg, "trace_dadmm.csv", hash);
        write_trace_csv(os, res.trace, true);
    }
    const auto& last = res.trace.records.back();
    const double rel = (res.allocation.total_cost - central.total_cost) / central.total_cost;
    std::cout << "method,total_cost,abscissa,rounds,consensus_residual\n"
              << "central," << format_number(central.total_cost) << ','
              << format_number(central.abscissa) << ",,\n"
              << "dadmm," << format_number(res.allocation.total_cost) << ','
              << format_number(res.allocation.abscissa) << ',' << last.iter << ','
              << format_number(last.consensus_residual) << '\n'
              << "# relative_gap=" << format_number(rel)
              << " converged=" << (res.trace.converged ? "yes" : "no") << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"SIS rate allocation: centralized and distributed solvers"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "experiment config (INI)")
            ->check(CLI::ExistingFile);
        sub->add_option("--out", common.out, "output directory (overrides [output] dir)");
    };

    auto* gen = app.add_subcommand("gen", "generate or load the graph and write graph.txt");
    add_common(gen);

    std::string mode = "central";
    std::string reference;
    auto* solve = app.add_subcommand("solve", "solve the allocation problem");
    add_common(solve);
    solve->add_option("--mode", mode, "central|dadmm")
        ->check(CLI::IsMember({"central", "dadmm"}));
    solve->add_option("--reference", reference, "reference solver for the gap column")
        ->check(CLI::IsMember({"central"}));

    std::string allocation;
    bool monte_carlo = false;
    auto* verify = app.add_subcommand("verify", "simulate an allocation and check its decay rate");
    add_common(verify);
    verify->add_option("--allocation", allocation, "allocation CSV")->required();
    verify->add_flag("--monte-carlo", monte_carlo, "also run the Markov chain cross-check");

    auto* corners = app.add_subcommand("corners", "stability at the four uniform corners");
    add_common(corners);

    auto* compare = app.add_subcommand("compare", "run both solvers and report the gap");
    add_common(compare);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (*gen)
            return cmd_gen(common);
        if (*solve)
            return cmd_solve(common, mode, reference);
        if (*verify)
            return cmd_verify(common, allocation, monte_carlo);
        if (*corners)
            return cmd_corners(common);
        if (*compare)
            return cmd_compare(common);
    } catch (const InfeasibleError& e) {
        std::cerr << e.what() << '\n';
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
