#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "app.hpp"
#include "crowdvote/reanalysis.hpp"
#include "report.hpp"

namespace fs = std::filesystem;
using crowdvote::app::dispatch;
using crowdvote::report::Json;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("crowdvote-cli-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("usage errors exit 2") {
    CHECK(run({}).code == 2);
    CHECK(run({"simulate-everything"}).code == 2);
    CHECK(run({"simulate-binary", "--bogus", "1"}).code == 2);
    CHECK(run({"simulate-binary", "--share", "1.5"}).code == 2);
    CHECK(run({"figdata"}).code == 2);
    CHECK(run({"simulate-degroot", "--distribution", "cauchy", "--runs", "1", "--n", "10", "--out", "-"}).code == 2);
    CHECK(run({"simulate-degroot", "--preset", "nope", "--out", "-"}).code == 2);
    CHECK(run({"reanalyze"}).code == 2);
    const auto help = run({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("simulate-binary") != std::string::npos);
}

TEST_CASE("I/O failures exit 1") {
    TempDir tmp;
    CHECK(run({"reanalyze", "--input", tmp.file("missing.csv")}).code == 1);
    CHECK(run({"simulate-binary", "--n", "10", "--runs", "2", "--steps", "3", "--seed", "1", "--out",
               tmp.file("no/such/dir/out.csv")})
              .code == 1);
    std::ofstream(tmp.file("bad.csv")) << "dataset,trial_id\n";
    const auto bad = run({"reanalyze", "--input", tmp.file("bad.csv"), "--out", "-"});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("malformed header") != std::string::npos);
}

TEST_CASE("simulate-binary writes a trajectory summary with provenance") {
    TempDir tmp;
    const auto path = tmp.file("traj.csv");
    const auto r = run({"simulate-binary", "--n", "1000", "--share", "0.6", "--f-min", "0.2", "--f-maj", "0",
                        "--steps", "50", "--runs", "100", "--seed", "7", "--out", path});
    REQUIRE(r.code == 0);
    const auto text = slurp(path);
    CHECK(text.rfind("# tool: crowdvote\n# version: ", 0) == 0);
    CHECK(text.find("# seed: 7\n# seed_source: explicit\n") != std::string::npos);
    CHECK(text.find("\"f_min\":0.2") != std::string::npos);
    CHECK(text.find("# table: trajectory\nstep,mean_share_ones,") != std::string::npos);
    CHECK(text.find("\"monotone_fraction\":1.0") != std::string::npos);
}

TEST_CASE("generated seeds are recorded") {
    const auto r = run({"simulate-binary", "--n", "5", "--runs", "1", "--steps", "1", "--out", "-"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("# seed_source: generated") != std::string::npos);
    CHECK(r.out.find("# seed: ") != std::string::npos);
}

TEST_CASE("default output location honours CROWDVOTE_OUTPUT_DIR") {
    TempDir tmp;
    ::setenv("CROWDVOTE_OUTPUT_DIR", tmp.path.c_str(), 1);
    const auto r = run({"simulate-calibrated", "--runs", "10", "--grid", "0.25,0.75", "--seed", "2",
                        "--format", "json"});
    ::unsetenv("CROWDVOTE_OUTPUT_DIR");
    REQUIRE(r.code == 0);
    const auto doc = Json::parse(slurp(tmp.file("simulate-calibrated.json")));
    CHECK(doc["provenance"]["command"] == "simulate-calibrated");
    CHECK(doc["tables"]["response"]["rows"].size() == 4);
}

TEST_CASE("empty result set gives a header-only file") {
    crowdvote::report::Report rep;
    rep.provenance = Json{{"tool", "crowdvote"}, {"command", "test"}};
    rep.tables.push_back({"empty", {"a", "b"}, {}});
    const auto csv = crowdvote::report::emit_report(rep, crowdvote::report::Format::Csv);
    CHECK(csv == "# tool: crowdvote\n# command: test\n# table: empty\na,b\n");
    const auto json = Json::parse(crowdvote::report::emit_report(rep, crowdvote::report::Format::Json));
    CHECK(json["tables"]["empty"]["rows"].empty());
    CHECK(json["tables"]["empty"]["columns"].size() == 2);
}

TEST_CASE("synthetic trials feed the reanalysis pipeline; the summary round-trips") {
    TempDir tmp;
    const auto trials = tmp.file("trials.csv");
    REQUIRE(run({"synth-trials", "--trials", "30", "--rounds", "3", "--seed", "4", "--out", trials}).code == 0);
    const auto parsed = crowdvote::load_trials(trials);
    REQUIRE(parsed.trials.size() == 30);

    const auto report_path = tmp.file("report.json");
    REQUIRE(run({"reanalyze", "--input", trials, "--resolution", "0.05", "--format", "json", "--out", report_path})
                .code == 0);
    const auto doc = Json::parse(slurp(report_path));
    const auto back = crowdvote::report::summary_from_json(doc.at("summary"));
    const auto direct = crowdvote::dataset_fit(parsed.trials, 0.05);

    CHECK(back.dataset_id == direct.dataset_id);
    CHECK(back.resolution == direct.resolution);
    CHECK(back.policy == direct.policy);
    CHECK(back.trials_scored == direct.trials_scored);
    CHECK(back.mean_fit == direct.mean_fit);
    CHECK(back.stderr_fit == direct.stderr_fit);
    CHECK(back.between_fraction == direct.between_fraction);
    CHECK(back.between_fraction_trial_mean == direct.between_fraction_trial_mean);
    CHECK(back.mean_improved_fraction == direct.mean_improved_fraction);
    CHECK(back.warnings == direct.warnings);
    REQUIRE(back.trials.size() == direct.trials.size());
    for (std::size_t i = 0; i < back.trials.size(); ++i) {
        CHECK(back.trials[i].trial_id == direct.trials[i].trial_id);
        CHECK(back.trials[i].fit == direct.trials[i].fit);
        CHECK(back.trials[i].matched == direct.trials[i].matched);
        CHECK(back.trials[i].between_count == direct.trials[i].between_count);
        CHECK(back.trials[i].mean_improved == direct.trials[i].mean_improved);
    }
    CHECK(doc["tables"]["resolution"]["rows"].size() == 3);

    const auto fig3 = run({"figdata", "fig3", "--input", trials, "--resolution", "0.1", "--out", "-"});
    REQUIRE(fig3.code == 0);
    CHECK(fig3.out.find("# table: fit_by_improvement") != std::string::npos);
}

TEST_CASE("reruns are byte-identical, independent of --jobs") {
    TempDir tmp;
    const std::vector<std::vector<std::string>> commands{
        {"simulate-binary", "--n", "101", "--runs", "20", "--steps", "30", "--f-maj", "0.05", "--weights", "random"},
        {"simulate-degroot", "--n", "50", "--runs", "20", "--resolution", "0.1"},
        {"simulate-calibrated", "--runs", "50"},
        {"figdata", "fig2", "--runs", "50", "--variant", "plain"},
        {"figdata", "a1", "--preset", "ec3-n100", "--runs", "10"},
        {"synth-trials", "--trials", "10"},
    };
    int k = 0;
    for (const auto& base : commands) {
        std::vector<std::string> paths;
        for (const char* jobs : {"1", "1", "3"}) {
            auto args = base;
            const auto path = tmp.file("run" + std::to_string(k++) + ".out");
            for (const char* extra : {"--seed", "99", "--jobs", jobs, "--out", path.c_str()}) args.push_back(extra);
            REQUIRE(run(args).code == 0);
            paths.push_back(path);
        }
        const auto first = slurp(paths[0]);
        CHECK(!first.empty());
        CHECK(first == slurp(paths[1]));
        CHECK(first == slurp(paths[2]));
    }
}
