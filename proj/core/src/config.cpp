#include "sisalloc/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sisalloc/errors.hpp"
#include "sisalloc/io.hpp"

namespace sisalloc {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema()
{
    static const std::map<std::string, std::set<std::string>> s = {
        {"graph", {"source", "file", "n", "p", "seed", "weight_lo", "weight_hi"}},
        {"bounds",
         {"mode", "beta_lo", "beta_hi", "delta_lo", "delta_hi", "tau_numerator", "beta_hi_mult",
          "beta_lo_frac"}},
        {"problem", {"eps_bar", "cost"}},
        {"dadmm", {"rho", "eta", "max_iter", "penalty", "threads", "random_init", "seed"}},
        {"simulation", {"horizon", "dt", "p0", "trials", "mc_horizon", "mc_dt", "mc_seed"}},
        {"output", {"dir"}},
    };
    return s;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& text)
{
    Int v{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end)
        throw IoError("config: '" + key + "' expects an integer, got '" + text + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& text)
{
    if (text == "true" || text == "1")
        return true;
    if (text == "false" || text == "0")
        return false;
    throw IoError("config: '" + key + "' expects true|false, got '" + text + "'");
}

class Reader {
public:
    explicit Reader(const pt::ptree& tree)
        : tree_(tree)
    {
    }

    void num(const std::string& path, double& out) const
    {
        if (const auto v = tree_.get_optional<std::string>(path)) {
            try {
                out = parse_number(*v);
            } catch (const IoError&) {
                throw IoError("config: '" + path + "' expects a number, got '" + *v + "'");
            }
        }
    }

    template <typename Int>
    void integer(const std::string& path, Int& out) const
    {
        if (const auto v = tree_.get_optional<std::string>(path))
            out = parse_int<Int>(path, *v);
    }

    void flag(const std::string& path, bool& out) const
    {
        if (const auto v = tree_.get_optional<std::string>(path))
            out = parse_bool(path, *v);
    }

    template <typename F>
    void text(const std::string& path, F&& assign) const
    {
        if (const auto v = tree_.get_optional<std::string>(path))
            assign(*v);
    }

private:
    const pt::ptree& tree_;
};

} // namespace

std::string to_string(GraphSource s)
{
    return s == GraphSource::Random ? "random" : "file";
}

std::string to_string(BoundsMode m)
{
    return m == BoundsMode::Recipe ? "recipe" : "explicit";
}

void ExperimentConfig::validate() const
{
    if (graph_source == GraphSource::File) {
        if (graph_file.empty())
            throw DomainError("config: graph.source = file needs graph.file");
        if (!std::filesystem::exists(graph_file))
            throw IoError("config: graph file '" + graph_file + "' does not exist");
    } else {
        if (n < 1)
            throw DomainError("config: graph.n must be >= 1");
        if (!(edge_prob > 0.0 && edge_prob <= 1.0))
            throw DomainError("config: graph.p must be in (0, 1]");
        if (!(weight_lo > 0.0 && weight_lo <= weight_hi))
            throw DomainError("config: need 0 < weight_lo <= weight_hi");
    }
    if (bounds_mode == BoundsMode::Explicit) {
        NodeBounds{beta_lo, beta_hi, delta_lo, delta_hi}.validate();
    } else {
        if (!(tau_numerator > 0.0 && beta_hi_mult > 0.0))
            throw DomainError("config: recipe needs tau_numerator > 0 and beta_hi_mult > 0");
        if (!(beta_lo_frac > 0.0 && beta_lo_frac <= 1.0))
            throw DomainError("config: recipe needs beta_lo_frac in (0, 1]");
        NodeBounds{1.0, 1.0, delta_lo, delta_hi}.validate();
    }
    if (!(eps_bar > 0.0))
        throw DomainError("config: eps_bar must be positive");
    if (!(rho > 0.0) || !(eta >= 0.0) || max_iter < 1 || threads < 1)
        throw DomainError("config: need rho > 0, eta >= 0, max_iter >= 1, threads >= 1");
    if (!(horizon > 0.0 && dt > 0.0 && dt <= horizon))
        throw DomainError("config: need 0 < dt <= horizon");
    if (!(p0 >= 0.0 && p0 <= 1.0))
        throw DomainError("config: p0 must be in [0, 1]");
    if (mc_trials < 2 || !(mc_horizon > 0.0 && mc_dt > 0.0 && mc_dt <= mc_horizon))
        throw DomainError("config: need trials >= 2 and 0 < mc_dt <= mc_horizon");
}

ExperimentConfig parse_config(std::istream& is)
{
    pt::ptree tree;
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw IoError(std::string("config: ") + e.what());
    }
    const auto& known = schema();
    for (const auto& [section, body] : tree) {
        const auto it = known.find(section);
        if (it == known.end())
            throw IoError("config: unknown section [" + section + "]");
        if (body.empty() && !body.data().empty())
            throw IoError("config: key '" + section + "' outside any section");
        for (const auto& [key, value] : body)
            if (!it->second.contains(key))
                throw IoError("config: unknown key '" + section + "." + key + "'");
    }

    ExperimentConfig c;
    const Reader r(tree);
    r.text("graph.source", [&](const std::string& v) {
        if (v == "random")
            c.graph_source = GraphSource::Random;
        else if (v == "file")
            c.graph_source = GraphSource::File;
        else
            throw IoError("config: graph.source expects random|file, got '" + v + "'");
    });
    r.text("graph.file", [&](const std::string& v) { c.graph_file = v; });
    r.integer("graph.n", c.n);
    r.num("graph.p", c.edge_prob);
    r.integer("graph.seed", c.graph_seed);
    r.num("graph.weight_lo", c.weight_lo);
    r.num("graph.weight_hi", c.weight_hi);

    r.text("bounds.mode", [&](const std::string& v) {
        if (v == "recipe")
            c.bounds_mode = BoundsMode::Recipe;
        else if (v == "explicit")
            c.bounds_mode = BoundsMode::Explicit;
        else
            throw IoError("config: bounds.mode expects recipe|explicit, got '" + v + "'");
    });
    r.num("bounds.beta_lo", c.beta_lo);
    r.num("bounds.beta_hi", c.beta_hi);
    r.num("bounds.delta_lo", c.delta_lo);
    r.num("bounds.delta_hi", c.delta_hi);
    r.num("bounds.tau_numerator", c.tau_numerator);
    r.num("bounds.beta_hi_mult", c.beta_hi_mult);
    r.num("bounds.beta_lo_frac", c.beta_lo_frac);

    r.num("problem.eps_bar", c.eps_bar);
    r.text("problem.cost", [&](const std::string& v) {
        try {
            c.cost = cost_kind_from_string(v);
        } catch (const DomainError& e) {
            throw IoError(std::string("config: ") + e.what());
        }
    });

    r.num("dadmm.rho", c.rho);
    r.num("dadmm.eta", c.eta);
    r.integer("dadmm.max_iter", c.max_iter);
    r.text("dadmm.penalty", [&](const std::string& v) {
        try {
            c.penalty = penalty_domain_from_string(v);
        } catch (const DomainError& e) {
            throw IoError(std::string("config: ") + e.what());
        }
    });
    r.integer("dadmm.threads", c.threads);
    r.flag("dadmm.random_init", c.random_init);
    r.integer("dadmm.seed", c.dadmm_seed);

    r.num("simulation.horizon", c.horizon);
    r.num("simulation.dt", c.dt);
    r.num("simulation.p0", c.p0);
    r.integer("simulation.trials", c.mc_trials);
    r.num("simulation.mc_horizon", c.mc_horizon);
    r.num("simulation.mc_dt", c.mc_dt);
    r.integer("simulation.mc_seed", c.mc_seed);

    r.text("output.dir", [&](const std::string& v) { c.out_dir = v; });
    return c;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config '" + path + "'");
    ExperimentConfig c = parse_config(in);
    // relative graph paths resolve against the config's directory
    if (c.graph_source == GraphSource::File && !c.graph_file.empty()) {
        const std::filesystem::path file(c.graph_file);
        if (file.is_relative())
            c.graph_file = (std::filesystem::path(path).parent_path() / file).lexically_normal().string();
    }
    return c;
}

void write_config(std::ostream& os, const ExperimentConfig& c)
{
    const auto num = [](double v) { return format_number(v); };
    os << "[graph]\n"
       << "source = " << to_string(c.graph_source) << '\n'
       << "file = " << c.graph_file << '\n'
       << "n = " << c.n << '\n'
       << "p = " << num(c.edge_prob) << '\n'
       << "seed = " << c.graph_seed << '\n'
       << "weight_lo = " << num(c.weight_lo) << '\n'
       << "weight_hi = " << num(c.weight_hi) << "\n\n";
    os << "[bounds]\n"
       << "mode = " << to_string(c.bounds_mode) << '\n'
       << "beta_lo = " << num(c.beta_lo) << '\n'
       << "beta_hi = " << num(c.beta_hi) << '\n'
       << "delta_lo = " << num(c.delta_lo) << '\n'
       << "delta_hi = " << num(c.delta_hi) << '\n'
       << "tau_numerator = " << num(c.tau_numerator) << '\n'
       << "beta_hi_mult = " << num(c.beta_hi_mult) << '\n'
       << "beta_lo_frac = " << num(c.beta_lo_frac) << "\n\n";
    os << "[problem]\n"
       << "eps_bar = " << num(c.eps_bar) << '\n'
       << "cost = " << to_string(c.cost) << "\n\n";
    os << "[dadmm]\n"
       << "rho = " << num(c.rho) << '\n'
       << "eta = " << num(c.eta) << '\n'
       << "max_iter = " << c.max_iter << '\n'
       << "penalty = " << to_string(c.penalty) << '\n'
       << "threads = " << c.threads << '\n'
       << "random_init = " << (c.random_init ? "true" : "false") << '\n'
       << "seed = " << c.dadmm_seed << "\n\n";
    os << "[simulation]\n"
       << "horizon = " << num(c.horizon) << '\n'
       << "dt = " << num(c.dt) << '\n'
       << "p0 = " << num(c.p0) << '\n'
       << "trials = " << c.mc_trials << '\n'
       << "mc_horizon = " << num(c.mc_horizon) << '\n'
       << "mc_dt = " << num(c.mc_dt) << '\n'
       << "mc_seed = " << c.mc_seed << "\n\n";
    os << "[output]\n"
       << "dir = " << c.out_dir << '\n';
}

std::string serialize_config(const ExperimentConfig& cfg)
{
    std::ostringstream os;
    write_config(os, cfg);
    return os.str();
}

std::string config_hash(const ExperimentConfig& cfg)
{
    ExperimentConfig keyed = cfg;
    keyed.out_dir.clear();
    return hex64(fnv1a64(serialize_config(keyed)));
}

} // namespace sisalloc
