#include "csl/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "csl/errors.hpp"
#include "csl/io.hpp"

namespace csl {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Field {
    std::string key;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
T parse_number(const std::string& s) {
    T v{};
    const std::string t = trim(s);
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw ConfigError("bad numeric value '" + s + "'");
    return v;
}

bool parse_bool(const std::string& s) {
    const std::string t = trim(s);
    if (t == "true" || t == "1") return true;
    if (t == "false" || t == "0") return false;
    throw ConfigError("bad boolean value '" + s + "'");
}

NoiseKind parse_kind(const std::string& s) {
    const std::string t = trim(s);
    if (t == "white") return NoiseKind::White;
    if (t == "affine") return NoiseKind::Affine;
    throw ConfigError("bad noise kind '" + s + "' (white|affine)");
}

std::string kind_name(NoiseKind k) {
    return k == NoiseKind::White ? "white" : "affine";
}

SimMode parse_mode(const std::string& s) {
    const std::string t = trim(s);
    if (t == "effective") return SimMode::Effective;
    if (t == "full_field") return SimMode::FullField;
    if (t == "markovian") return SimMode::MarkovianOnly;
    throw ConfigError("bad mode '" + s +
                      "' (effective|full_field|markovian)");
}

std::string mode_name(SimMode m) {
    switch (m) {
    case SimMode::Effective: return "effective";
    case SimMode::FullField: return "full_field";
    case SimMode::MarkovianOnly: return "markovian";
    }
    return "effective";
}

#define NUM_FIELD(KEY, REF, TYPE)                                       \
    Field{KEY,                                                          \
          [](ExperimentConfig& c, const std::string& v) {               \
              c.REF = parse_number<TYPE>(v);                            \
          },                                                            \
          [](const ExperimentConfig& c) { return std::to_string(c.REF); }}

#define DBL_FIELD(KEY, REF)                                             \
    Field{KEY,                                                          \
          [](ExperimentConfig& c, const std::string& v) {               \
              c.REF = parse_number<double>(v);                          \
          },                                                            \
          [](const ExperimentConfig& c) { return format_double(c.REF); }}

#define BOOL_FIELD(KEY, REF)                                            \
    Field{KEY,                                                          \
          [](ExperimentConfig& c, const std::string& v) {               \
              c.REF = parse_bool(v);                                    \
          },                                                            \
          [](const ExperimentConfig& c) {                               \
              return c.REF ? std::string("true") : std::string("false"); \
          }}

const std::vector<Field>& field_table() {
    static const std::vector<Field> fields = {
        Field{"run_name",
              [](ExperimentConfig& c, const std::string& v) {
                  c.run_name = trim(v);
              },
              [](const ExperimentConfig& c) { return c.run_name; }},
        NUM_FIELD("seed", seed, std::uint64_t),
        Field{"outputs",
              [](ExperimentConfig& c, const std::string& v) {
                  c.outputs = trim(v);
              },
              [](const ExperimentConfig& c) { return c.outputs; }},
        NUM_FIELD("workers", workers, std::size_t),
        DBL_FIELD("params.hbar", params.hbar),
        DBL_FIELD("params.mass", params.mass),
        DBL_FIELD("params.alpha", params.alpha),
        DBL_FIELD("params.lambda", params.lambda),
        DBL_FIELD("params.p0", params.p0),
        Field{"sim.mode",
              [](ExperimentConfig& c, const std::string& v) {
                  c.sim.mode = parse_mode(v);
              },
              [](const ExperimentConfig& c) { return mode_name(c.sim.mode); }},
        NUM_FIELD("sim.n_trajectories", sim.n_trajectories, std::size_t),
        NUM_FIELD("sim.time.n_steps", sim.time.n_steps, std::size_t),
        DBL_FIELD("sim.time.dt", sim.time.dt),
        NUM_FIELD("sim.output_every", sim.output_every, std::size_t),
        Field{"sim.noise_db.kind",
              [](ExperimentConfig& c, const std::string& v) {
                  c.sim.noise_dB.kind = parse_kind(v);
              },
              [](const ExperimentConfig& c) {
                  return kind_name(c.sim.noise_dB.kind);
              }},
        DBL_FIELD("sim.noise_db.exponent", sim.noise_dB.exponent),
        Field{"sim.noise_dw.kind",
              [](ExperimentConfig& c, const std::string& v) {
                  c.sim.noise_dw.kind = parse_kind(v);
              },
              [](const ExperimentConfig& c) {
                  return kind_name(c.sim.noise_dw.kind);
              }},
        DBL_FIELD("sim.noise_dw.exponent", sim.noise_dw.exponent),
        DBL_FIELD("sim.grid.q_min", sim.grid.q_min),
        DBL_FIELD("sim.grid.q_max", sim.grid.q_max),
        NUM_FIELD("sim.grid.n_cells", sim.grid.n_cells, std::size_t),
        DBL_FIELD("sim.initial.x0", sim.initial.x0),
        DBL_FIELD("sim.initial.sigma_x", sim.initial.sigma_x),
        DBL_FIELD("sim.initial.p_mean", sim.initial.p_mean),
        DBL_FIELD("sim.initial.sigma_p", sim.initial.sigma_p),
        BOOL_FIELD("sim.reconvolve", sim.reconvolve),
        DBL_FIELD("fpe.alpha", fpe.alpha),
        DBL_FIELD("fpe.lambda", fpe.lambda),
        DBL_FIELD("fpe.grid.x_min", fpe.grid.x_min),
        DBL_FIELD("fpe.grid.x_max", fpe.grid.x_max),
        NUM_FIELD("fpe.grid.n_x", fpe.grid.n_x, std::size_t),
        DBL_FIELD("fpe.grid.p_min", fpe.grid.p_min),
        DBL_FIELD("fpe.grid.p_max", fpe.grid.p_max),
        NUM_FIELD("fpe.grid.n_p", fpe.grid.n_p, std::size_t),
        DBL_FIELD("fpe.init.x0", fpe.init_x0),
        DBL_FIELD("fpe.init.p_mean", fpe.init_p_mean),
        DBL_FIELD("fpe.init.sigma_x", fpe.init_sigma_x),
        DBL_FIELD("fpe.init.sigma_p", fpe.init_sigma_p),
        DBL_FIELD("fpe.t_final", fpe.t_final),
        DBL_FIELD("fpe.dt", fpe.dt),
        NUM_FIELD("fpe.snapshot_every", fpe.snapshot_every, std::size_t),
        NUM_FIELD("fpe.compare.n_trajectories", fpe.compare_n_trajectories,
                  std::size_t),
        DBL_FIELD("fpe.compare.mc_dt", fpe.compare_mc_dt),
        NUM_FIELD("fpe.compare.coarsen", fpe.compare_coarsen, std::size_t),
        DBL_FIELD("fit.window.t_lo", fit.window.t_lo),
        DBL_FIELD("fit.window.t_hi", fit.window.t_hi),
    };
    return fields;
}

#undef NUM_FIELD
#undef DBL_FIELD
#undef BOOL_FIELD

} // namespace

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig config;
    std::map<std::string, const Field*> by_key;
    for (const Field& f : field_table()) by_key[f.key] = &f;

    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected 'key = value', got '" + t + "'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        const auto it = by_key.find(key);
        if (it == by_key.end())
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": unknown key '" + key + "'");
        if (!seen.insert(key).second)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": duplicate key '" + key + "'");
        try {
            it->second->set(config, value);
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": " + e.what());
        }
    }
    return config;
}

std::string serialize_config(const ExperimentConfig& config) {
    std::string out;
    for (const Field& f : field_table()) {
        out += f.key;
        out += " = ";
        out += f.get(config);
        out += '\n';
    }
    return out;
}

SimConfig ExperimentConfig::sim_config() const {
    SimConfig cfg;
    cfg.params = params;
    cfg.noise_dB = sim.noise_dB;
    cfg.noise_dw = sim.noise_dw;
    cfg.mode = sim.mode;
    cfg.n_trajectories = sim.n_trajectories;
    cfg.time = sim.time;
    cfg.grid = sim.grid;
    cfg.master_seed = seed;
    cfg.initial = sim.initial;
    cfg.output_every = sim.output_every;
    cfg.reconvolve = sim.reconvolve;
    cfg.workers = workers;
    return cfg;
}

PhysParams ExperimentConfig::fpe_params() const {
    PhysParams p = params;
    p.alpha = fpe.alpha;
    p.lambda = fpe.lambda;
    return p;
}

SimConfig ExperimentConfig::fpe_compare_config() const {
    SimConfig cfg;
    cfg.params = fpe_params();
    cfg.mode = SimMode::MarkovianOnly;
    cfg.n_trajectories = fpe.compare_n_trajectories;
    const double dt = fpe.compare_mc_dt;
    if (!(dt > 0.0) || !(fpe.t_final > 0.0))
        throw ConfigError("fpe.compare.mc_dt and fpe.t_final must be > 0");
    const auto n_steps =
        static_cast<std::size_t>(std::ceil(fpe.t_final / dt - 1e-9));
    cfg.time.n_steps = std::max<std::size_t>(1, n_steps);
    cfg.time.dt = fpe.t_final / static_cast<double>(cfg.time.n_steps);
    cfg.master_seed = seed;
    cfg.initial = InitialCondition{fpe.init_x0, fpe.init_sigma_x,
                                   fpe.init_p_mean, fpe.init_sigma_p};
    cfg.output_every = cfg.time.n_steps;
    cfg.workers = workers;
    return cfg;
}

std::string resolve_output_root(const ExperimentConfig& config) {
    if (!config.outputs.empty()) return config.outputs;
    if (const char* env = std::getenv("CSL_DIFFUSION_OUT"); env && *env)
        return env;
    return "out";
}

} // namespace csl
