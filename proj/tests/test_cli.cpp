#include "sigpal/cli.hpp"
#include "sigpal/serialize.hpp"
#include "sigpal/sim_harness.hpp"
#include "sigpal/theory.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace sigpal;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::vector<const char*> argv{"sigpal"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

struct Workspace {
    fs::path dir;
    Workspace() : dir(fs::temp_directory_path() / ("sigpal_cli_" + std::to_string(std::random_device{}()))) {
        fs::create_directories(dir);
        sim::GeneratorSpec g;
        g.kind = sim::Case::mixture_one_direction;
        g.n = 24;
        g.d = 2;
        g.v = 1;
        g.a = 1.0;
        g.labeled_per_class = 6;
        Rng rng(3);
        const auto mix = sim::gen_mixture(g, rng);
        write_csv(dir / "toy.csv", mix.data);
        write_csv(dir / "full.csv", PartiallyLabeledDataset(mix.data.x(), mix.truth));
    }
    ~Workspace() { fs::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::string slurp(const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string l; std::getline(ss, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST_CASE("format_double round-trips") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) CHECK(std::stod(format_double(v)) == v);
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "NaN");
}

TEST_CASE("spectrum and assigner JSON round trips") {
    EigenSpectrum s = known_spectrum(Eigen::Vector3d(3, 2, 1));
    s.source = SpectrumSource::soft;
    s.noise_level = 0.5;
    s.tau = 0.25;
    s.energy_preserved = false;
    const auto back = spectrum_from_json(to_json(s));
    CHECK(back.values == s.values);
    CHECK(back.source == SpectrumSource::soft);
    CHECK(*back.tau == 0.25);
    CHECK(*back.noise_level == 0.5);
    CHECK_FALSE(back.energy_preserved);
    CHECK(spectrum_from_json(Json::parse("[1, 4, 2]")).values == Eigen::Vector3d(4, 2, 1));

    AssignerSpec a;
    a.kind = AssignerKind::l1_lda;
    a.penalty = 0.3;
    a.restarts = 4;
    const auto ab = assigner_from_json(to_json(a));
    CHECK(ab.kind == a.kind);
    CHECK(ab.penalty == a.penalty);
    CHECK(ab.restarts == a.restarts);
    CHECK(assigner_from_json(Json("s3lda")).kind == AssignerKind::s3lda);
}

TEST_CASE("preset JSON round trip") {
    const auto p = sim::preset("fig7");
    const auto back = sim::preset_from_json(sim::to_json(p));
    CHECK(sim::to_json(back).dump() == sim::to_json(p).dump());
    const auto custom = sim::preset_from_json(Json::parse(R"({
        "name": "mine", "reps": 2, "n_sim": 5,
        "settings": [{"label": "s", "generator": {"kind": "one_cluster", "n": 10, "d": 5, "labeled_total": 4}}],
        "methods": ["sigclust", {"base": "sigpal_cop", "id": "cop_known", "eigen": "known"}]})"));
    CHECK(custom.methods.size() == 2);
    CHECK(custom.methods[1].eigen == EigenMethodKind::known);
    CHECK(custom.settings[0].spec.d == 5);
}

TEST_CASE("cli test writes JSON with the resolved config and is repeatable") {
    Workspace w;
    const auto out1 = w.path("r1.json"), out2 = w.path("r2.json");
    const auto a = run({"test", "--method", "sigpal", "--assigner", "cop-kmeans", "--n-sim", "30", "--seed", "7",
                        "--input", w.path("toy.csv"), "--output", out1});
    REQUIRE(a.code == 0);
    CHECK(a.out.find("p-value: ") != std::string::npos);
    CHECK(a.out.find("seed: 7") != std::string::npos);
    const auto b = run({"--threads", "2", "test", "--method", "sigpal", "--assigner", "cop-kmeans", "--n-sim", "30",
                        "--seed", "7", "--input", w.path("toy.csv"), "--output", out2});
    REQUIRE(b.code == 0);
    CHECK(slurp(out1) == slurp(out2));
    const auto doc = Json::parse(slurp(out1));
    CHECK(doc["config"]["seed"] == 7);
    CHECK(doc["result"]["null_stats"].size() == 30);
    CHECK(doc["result"]["metadata"]["centered"] == "true");
}

TEST_CASE("cli test materializes and echoes a seed when none is given") {
    Workspace w;
    const auto r = run({"test", "--method", "sigclust", "--n-sim", "5", "--input", w.path("toy.csv"), "--output",
                        w.path("s.json")});
    REQUIRE(r.code == 0);
    const auto doc = Json::parse(slurp(w.path("s.json")));
    const auto seed = doc["config"]["seed"].get<std::uint64_t>();
    CHECK(r.out.find("seed: " + std::to_string(seed)) != std::string::npos);
    const auto again = run({"test", "--method", "sigclust", "--n-sim", "5", "--seed", std::to_string(seed), "--input",
                            w.path("toy.csv"), "--output", w.path("s2.json")});
    CHECK(slurp(w.path("s.json")) == slurp(w.path("s2.json")));
}

TEST_CASE("cli test csv output, null dump, rotation and known spectrum") {
    Workspace w;
    std::ofstream(w.path("spec.txt")) << "2.0\n1.0\n";
    const auto r = run({"test", "--method", "sigpal", "--eigen", "known:" + w.path("spec.txt"), "--rotate", "--n-sim",
                        "12", "--seed", "1", "--format", "csv", "--input", w.path("toy.csv"), "--output",
                        w.path("r.csv"), "--null-csv", w.path("nulls.csv")});
    REQUIRE(r.code == 0);
    const auto csv = slurp(w.path("r.csv"));
    CHECK(csv.rfind("field,value\n", 0) == 0);
    CHECK(csv.find("config.rotate,true") != std::string::npos);
    CHECK(lines(slurp(w.path("nulls.csv"))).size() == 13);
}

TEST_CASE("cli exit codes") {
    Workspace w;
    const auto dpp = run({"test", "--method", "diproperm", "--input", w.path("toy.csv"), "--seed", "1"});
    CHECK(dpp.code == 2);
    CHECK(dpp.err.find("diproperm requires full labels") != std::string::npos);
    CHECK(run({"test", "--method", "diproperm", "--input", w.path("full.csv"), "--seed", "1"}).code == 0);
    CHECK(run({"test", "--input", w.path("missing.csv")}).code == 2);
    CHECK(run({"test", "--method", "magic", "--input", w.path("toy.csv")}).code == 2);
    CHECK(run({"test", "--eigen", "medium", "--input", w.path("toy.csv")}).code == 2);
    CHECK(run({"test", "--input", w.path("toy.csv"), "--output", w.path("nodir/x.json")}).code == 2);
    CHECK(run({"bogus"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"--help"}).code == 0);

    std::ofstream(w.path("one_class.csv")) << "label,x\n1,0\n1,1\nNA,2\nNA,5\n";
    const auto s3 = run({"test", "--assigner", "s3lda", "--input", w.path("one_class.csv"), "--seed", "1"});
    CHECK(s3.code == 2);

    std::ofstream(w.path("flat.csv")) << "label,x\n1,0\n-1,0\nNA,0\nNA,0\n";
    CHECK(run({"test", "--method", "sigclust", "--input", w.path("flat.csv"), "--seed", "1"}).code == 2);
}

TEST_CASE("cli simulate") {
    Workspace w;
    const auto out = w.path("rep.csv");
    const auto r = run({"simulate", "--preset", "table1-row1", "--reps", "2", "--n-sim", "5", "--seed", "1", "--output", out});
    REQUIRE(r.code == 0);
    const auto rows = lines(slurp(out));
    CHECK(rows[0] == "replicate,method,p_value,seed");
    CHECK(rows.size() == 1 + 2 * 4);
    const auto summary = Json::parse(slurp(w.path("rep.summary.json")));
    CHECK(summary["config"]["seed"] == 1);
    CHECK(summary["desk_scale"] == false);

    const auto desk = run({"simulate", "--preset", "fig4", "--desk-scale", "--reps", "1", "--n-sim", "3", "--seed", "2",
                           "--output", w.path("desk.csv")});
    REQUIRE(desk.code == 0);
    CHECK(Json::parse(slurp(w.path("desk.summary.json")))["desk_scale"] == true);
    CHECK(lines(slurp(w.path("desk.csv")))[1].find("a0:") != std::string::npos);

    const auto bad = run({"simulate", "--preset", "table9"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("table1-row14") != std::string::npos);
    const auto list = run({"simulate", "--list-presets"});
    CHECK(list.code == 0);
    CHECK(list.out.find("fig8") != std::string::npos);

    std::ofstream(w.path("cfg.json")) << R"({"name": "tiny", "reps": 2, "n_sim": 4,
        "settings": [{"label": "null", "generator": {"kind": "one_cluster", "n": 12, "d": 8, "labeled_total": 4}}],
        "methods": ["sigpal_cop"]})";
    const auto cfg = run({"simulate", "--config", w.path("cfg.json"), "--seed", "3", "--output", w.path("cfg.csv")});
    CHECK(cfg.code == 0);
    CHECK(lines(slurp(w.path("cfg.csv"))).size() == 3);
}

TEST_CASE("cli theory curve") {
    const auto r = run({"theory", "--r", "0.5", "--grid", "0:1:0.01"});
    REQUIRE(r.code == 0);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() == 102);
    CHECK(rows[0] == "theta,tci_sigpal,tci_sigclust,difference");
    CHECK(rows[1].substr(rows[1].rfind(',') + 1) == "0");
    const double pi = std::numbers::pi;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double theta = std::stod(rows[i].substr(0, rows[i].find(',')));
        const double diff = std::stod(rows[i].substr(rows[i].rfind(',') + 1));
        CHECK(std::abs(diff - (theta * theta * theta - 3 * theta * theta + (pi + 3) * theta) / pi) <= 1e-12);
    }
    CHECK(run({"theory", "--r", "0.5", "--grid", "0.5:0.2:0.1"}).code == 2);
    CHECK(run({"theory", "--r", "0.5", "--grid", ""}).code == 2);
    CHECK(run({"theory", "--r", "0", "--grid", "0:1:0.5"}).code == 2);
    CHECK(run({"theory", "--r", "1.5"}).code == 2);
    CHECK(run({"theory", "--r", "1", "--grid", "0:1:0.5"}).code == 0);
}

TEST_CASE("cli theory sweep") {
    const auto r = run({"theory", "--sweep", "--d", "5,10", "--reps", "2", "--n-sim", "5", "--seed", "4"});
    REQUIRE(r.code == 0);
    const auto rows = lines(r.out);
    CHECK(rows.size() == 3);
    CHECK(rows[0].rfind("d,mean_p,sd_p", 0) == 0);
    CHECK(run({"theory", "--sweep", "--d", "10,5"}).code == 2);
}
