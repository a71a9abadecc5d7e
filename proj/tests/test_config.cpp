#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "csl/config.hpp"
#include "csl/errors.hpp"
#include "csl/io.hpp"
#include "test_support.hpp"

using namespace csl;

TEST_CASE("defaults round trip through serialize/parse") {
    const ExperimentConfig def;
    const ExperimentConfig back = parse_config(serialize_config(def));
    CHECK(back == def);
}

TEST_CASE("non-default values round trip exactly") {
    ExperimentConfig c;
    c.run_name = "sweep-17";
    c.seed = 0xDEADBEEFCAFEull;
    c.outputs = "/tmp/somewhere";
    c.workers = 5;
    c.params.alpha = 12.5;
    c.params.lambda = 0.25;
    c.params.p0 = -0.75;
    c.sim.mode = SimMode::FullField;
    c.sim.noise_dB = NoiseSpec{NoiseKind::White, 1.0};
    c.sim.noise_dw = NoiseSpec{NoiseKind::Affine, 1.4142135623730951};
    c.sim.n_trajectories = 123;
    c.sim.time = TimeGrid{777, 2.5e-4};
    c.sim.grid = SpatialGrid{-17.5, 18.25, 1234};
    c.sim.initial = InitialCondition{0.125, 0.25, -0.5, 0.0625};
    c.sim.output_every = 7;
    c.sim.reconvolve = true;
    c.fpe.alpha = 3.5;
    c.fpe.grid.n_x = 64;
    c.fpe.t_final = 0.375;
    c.fpe.compare_coarsen = 8;
    c.fit.window = FitWindow{0.25, 1.75};

    const std::string text = serialize_config(c);
    const ExperimentConfig back = parse_config(text);
    CHECK(back == c);

    // Serialization is canonical: a second round trip is byte-identical.
    CHECK(serialize_config(back) == text);
}

TEST_CASE("minimal config gives documented defaults") {
    const ExperimentConfig c = parse_config("run_name = demo\n");
    CHECK(c.run_name == "demo");
    CHECK(c.params.hbar == 1.0);
    CHECK(c.params.mass == 1.0);
    CHECK(c.params.alpha == 6.0);
    CHECK(c.params.lambda == 1.0);
    CHECK(c.sim.mode == SimMode::Effective);
    CHECK(c.sim.n_trajectories == 10000);
    CHECK(c.sim.time.n_steps == 2000);
    CHECK(c.sim.time.dt == 1e-3);
    CHECK(c.fpe.grid.n_x == 256);
    CHECK(c.fpe.alpha == 2.0);
}

TEST_CASE("comments, blank lines and spacing are tolerated") {
    const std::string text =
        "# experiment sweep\n"
        "\n"
        "run_name   =    spaced out name  \n"
        "   params.alpha=9\n"
        "# trailing comment line\n";
    const ExperimentConfig c = parse_config(text);
    CHECK(c.run_name == "spaced out name");
    CHECK(c.params.alpha == 9.0);
}

TEST_CASE("parse errors carry line numbers") {
    try {
        parse_config("run_name = ok\nnot a key value line\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    try {
        parse_config("unknown.key = 1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("unknown.key") != std::string::npos);
    }

    try {
        parse_config("params.alpha = 1\nparams.alpha = 2\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
    }

    CHECK_THROWS_AS(parse_config("params.alpha = banana\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("sim.mode = sideways\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("sim.reconvolve = maybe\n"), ConfigError);
}

TEST_CASE("sim_config assembly") {
    ExperimentConfig c;
    c.seed = 99;
    c.workers = 3;
    c.params.alpha = 4.0;
    c.sim.n_trajectories = 50;
    const SimConfig sim = c.sim_config();
    CHECK(sim.master_seed == 99);
    CHECK(sim.workers == 3);
    CHECK(sim.params.alpha == 4.0);
    CHECK(sim.n_trajectories == 50);
}

TEST_CASE("fpe compare config matches the solver stage") {
    ExperimentConfig c;
    c.fpe.t_final = 1.0;
    c.fpe.compare_mc_dt = 0.0075; // does not divide t_final evenly
    const SimConfig mc = c.fpe_compare_config();
    CHECK(mc.mode == SimMode::MarkovianOnly);
    CHECK(mc.params.alpha == c.fpe.alpha);
    CHECK(mc.params.lambda == c.fpe.lambda);
    CHECK(static_cast<double>(mc.time.n_steps) * mc.time.dt ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mc.initial.sigma_x == c.fpe.init_sigma_x);
}

TEST_CASE("output root resolution") {
    ExperimentConfig c;
    c.outputs = "elsewhere";
    CHECK(resolve_output_root(c) == "elsewhere");
    c.outputs.clear();
    ::unsetenv("CSL_DIFFUSION_OUT");
    CHECK(resolve_output_root(c) == "out");
    ::setenv("CSL_DIFFUSION_OUT", "/data/runs", 1);
    CHECK(resolve_output_root(c) == "/data/runs");
    ::unsetenv("CSL_DIFFUSION_OUT");
}

TEST_CASE("moments CSV round trip") {
    EnsembleMoments m;
    for (int i = 0; i < 5; ++i) {
        MomentRow r;
        r.t = 0.1 * (i + 1);
        r.mean_x = 0.01 * i;
        r.var_x = 1.0 + 0.3333333333333333 * i;
        r.mean_p = -0.5 * i;
        r.var_p = 2.0 + i;
        r.cov_xp = 0.1 * i;
        r.se_var_x = 0.01;
        r.se_var_p = 0.02;
        r.n = 1000 - i;
        m.rows.push_back(r);
    }
    const std::string text = moments_to_csv(m);
    const EnsembleMoments back = moments_from_csv(text);
    CHECK(back == m);
}

TEST_CASE("moments CSV parse errors carry line numbers") {
    const std::string good = moments_to_csv(EnsembleMoments{{MomentRow{}}});
    try {
        moments_from_csv(good + "1,2,3\n");
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
    CHECK_THROWS_AS(moments_from_csv("t,wrong,header\n1,2,3\n"), IoError);
    CHECK_THROWS_AS(moments_from_csv(""), IoError);
}

TEST_CASE("atomic write leaves no partial files") {
    csl_test::TempDir dir("csl-io");
    const auto target = dir.path() / "nested" / "file.csv";
    atomic_write(target, "hello\n");
    CHECK(read_file(target) == "hello\n");
    atomic_write(target, "replaced\n");
    CHECK(read_file(target) == "replaced\n");
    // No temp leftovers.
    std::size_t count = 0;
    for ([[maybe_unused]] const auto& entry :
         std::filesystem::directory_iterator(target.parent_path()))
        ++count;
    CHECK(count == 1);
    CHECK_THROWS_AS(read_file(dir.path() / "missing.txt"), IoError);
}
