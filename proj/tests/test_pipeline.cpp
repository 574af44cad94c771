#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "hatedet/config.hpp"
#include "hatedet/errors.hpp"
#include "hatedet/pipeline.hpp"
#include "hatedet/text_util.hpp"
#include "support.hpp"

using namespace hatedet;
namespace fs = std::filesystem;

namespace {

PipelineConfig fixture_config(const testing::ScratchDir& dir) {
    PipelineConfig c = load_config(testing::fixture("mini/config.toml"));
    c.paths.work_dir = dir / "work";
    c.paths.cache_dir = dir / "cache";
    c.paths.models_dir = dir / "models";
    c.paths.reports_dir = dir / "reports";
    return c;
}

std::map<Stage, StageState> states(const std::vector<StageStatus>& statuses) {
    std::map<Stage, StageState> out;
    for (const auto& s : statuses) out[s.stage] = s.state;
    return out;
}

std::string slurp(const fs::path& p) { return read_file(p); }

const ReportEntry* find_entry(const std::vector<ReportEntry>& entries, const std::string& model, Split split) {
    for (const auto& e : entries) {
        if (e.model == model && e.split == split) return &e;
    }
    return nullptr;
}

struct CliResult {
    int code = -1;
    std::string output;
};

CliResult run_cli(const std::string& args) {
    CliResult r;
    const std::string cmd = std::string(HATEDET_CLI) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

}  // namespace

TEST_CASE("stage names") {
    for (Stage s : kStageOrder) CHECK(parse_stage(to_string(s)) == s);
    CHECK_THROWS_AS((void)parse_stage("deploy"), ConfigError);
    CHECK(to_string(StageState::WouldRun) == "would run");
}

TEST_CASE("fixture run-all, cached rerun and forced ensemble") {
    testing::ScratchDir dir("pipeline");
    const PipelineConfig config = fixture_config(dir);

    Pipeline first(config);
    const auto s1 = states(first.run_all());
    for (Stage s : kStageOrder) CHECK(s1.at(s) == StageState::Ran);

    const auto report = first.load_report();
    const auto* mem = find_entry(report, "memorize", Split::Test);
    REQUIRE(mem != nullptr);
    CHECK(mem->report.macro_f1 == doctest::Approx(1.0));
    CHECK(find_entry(report, "ensemble", Split::Eval) != nullptr);
    CHECK(find_entry(report, "llm-few_shot", Split::Test) != nullptr);
    CHECK(fs::exists(first.paths().report_dir / "report.txt"));
    CHECK(fs::exists(first.paths().report_dir / "confusion_memorize_test.png"));
    CHECK(load_dataset(first.paths().augmented, config.scheme()).size() == 36);

    const std::string report_bytes = slurp(first.paths().report_dir / "report.json");

    Pipeline again(config);
    for (const auto& [stage, state] : states(again.run_all())) CHECK(state == StageState::Cached);

    RunOptions force;
    force.force = {Stage::Ensemble};
    Pipeline forced(config, force);
    const auto s3 = states(forced.run_all());
    for (Stage s : {Stage::Ingest, Stage::Ocr, Stage::Augment, Stage::Train, Stage::Predict, Stage::Llm}) {
        CHECK(s3.at(s) == StageState::Cached);
    }
    CHECK(s3.at(Stage::Ensemble) == StageState::Ran);
    CHECK(s3.at(Stage::Evaluate) == StageState::Ran);
    CHECK(slurp(first.paths().report_dir / "report.json") == report_bytes);
}

TEST_CASE("runs in separate directories are byte-identical") {
    testing::ScratchDir a("det-a");
    testing::ScratchDir b("det-b");
    Pipeline pa(fixture_config(a));
    Pipeline pb(fixture_config(b));
    pa.run_all();
    pb.run_all();
    CHECK(slurp(pa.paths().report_dir / "report.json") == slurp(pb.paths().report_dir / "report.json"));
    CHECK(slurp(pa.paths().report_dir / "report.txt") == slurp(pb.paths().report_dir / "report.txt"));
    for (const char* model : {"memorize", "hash", "linear", "ensemble", "llm-few_shot"}) {
        CHECK(slurp(pa.paths().predictions(model, Split::Test)) == slurp(pb.paths().predictions(model, Split::Test)));
    }
    CHECK(slurp(a / "models/linear/handle.json") == slurp(b / "models/linear/handle.json"));
}

TEST_CASE("damaged artifacts rerun only their own stage onwards") {
    testing::ScratchDir dir("damage");
    const PipelineConfig config = fixture_config(dir);
    Pipeline(config).run_all();

    fs::remove(Pipeline(config).paths().predictions("ensemble", Split::Test));
    const auto s = states(Pipeline(config).run_all());
    CHECK(s.at(Stage::Predict) == StageState::Cached);
    CHECK(s.at(Stage::Llm) == StageState::Cached);
    CHECK(s.at(Stage::Ensemble) == StageState::Ran);
    CHECK(s.at(Stage::Evaluate) == StageState::Cached);

    std::ofstream(dir / "models/hash/handle.json", std::ios::app) << " ";
    const auto t = states(Pipeline(config).run_all());
    CHECK(t.at(Stage::Augment) == StageState::Cached);
    CHECK(t.at(Stage::Train) == StageState::Ran);
}

TEST_CASE("config changes invalidate the affected stages") {
    testing::ScratchDir dir("config-change");
    PipelineConfig config = fixture_config(dir);
    Pipeline(config).run_all();
    config.ensemble.tie_break = "lowest_code";
    const auto s = states(Pipeline(config).run_all());
    CHECK(s.at(Stage::Train) == StageState::Cached);
    CHECK(s.at(Stage::Ensemble) == StageState::Ran);

    config.models[2].config.epochs = 3;
    const auto t = states(Pipeline(config).run_all());
    CHECK(t.at(Stage::Train) == StageState::Ran);
}

TEST_CASE("dry run reports pending stages without writing") {
    testing::ScratchDir dir("dry");
    const PipelineConfig config = fixture_config(dir);
    RunOptions dry;
    dry.dry_run = true;
    std::ostringstream log;
    dry.log = &log;
    const auto s = Pipeline(config, dry).run_all();
    for (const auto& st : s) CHECK(st.state == StageState::WouldRun);
    CHECK_FALSE(fs::exists(dir / "work"));
    CHECK(log.str().find("ingest: would run") != std::string::npos);

    Pipeline(config).run_until(Stage::Train);
    RunOptions dry2;
    dry2.dry_run = true;
    const auto t = states(Pipeline(config, dry2).run_all());
    CHECK(t.at(Stage::Train) == StageState::Cached);
    CHECK(t.at(Stage::Predict) == StageState::WouldRun);
    CHECK(t.at(Stage::Evaluate) == StageState::WouldRun);
    CHECK_FALSE(fs::exists(dir / "reports"));
}

TEST_CASE("run_until stops at the target stage") {
    testing::ScratchDir dir("until");
    Pipeline p(fixture_config(dir));
    const auto s = p.run_until(Stage::Ocr);
    REQUIRE(s.size() == 2);
    CHECK(fs::exists(p.paths().ocr_dataset));
    CHECK_FALSE(fs::exists(p.paths().augmented));
    const Dataset ds = load_dataset(p.paths().ocr_dataset, p.config().scheme());
    for (const auto& i : ds.instances()) CHECK_FALSE(i.text.empty());
    CHECK_THROWS_AS((void)p.load_report(), MissingReport);
}

TEST_CASE("explicit members and weighted voting") {
    testing::ScratchDir dir("weighted");
    PipelineConfig config = fixture_config(dir);
    config.ensemble.rule = "weighted";
    config.ensemble.members = {"hash", "memorize", "linear"};
    Pipeline p(config);
    p.run_all();
    const auto spec = nlohmann::json::parse(slurp(p.paths().predictions_dir / "ensemble.spec.json"));
    CHECK(spec["rule"] == "weighted");
    CHECK(spec["members"][0]["model"] == "hash");
    CHECK(spec["members"][1]["weight"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("cli exit codes") {
    testing::ScratchDir dir("cli");
    const fs::path manifest = dir / "manifest.csv";
    const auto write_config = [&](const fs::path& m) {
        std::ofstream(dir / "c.toml") << "task = \"A\"\n[paths]\nmanifest = \"" << m.generic_string()
                                      << "\"\n[[model]]\nname = \"m\"\n";
    };
    std::ofstream(manifest) << "id,image_path,text,label,split\na,,hello there,HATE,train\nb,,bye now,NO-HATE,train\n";
    write_config(manifest);
    const std::string cfg = "-c " + (dir / "c.toml").string();

    const auto ok = run_cli(cfg + " -q ingest");
    CHECK(ok.code == 0);
    CHECK(ok.output.find("HATE") != std::string::npos);

    const fs::path bad = dir / "bad.csv";
    std::ofstream(bad) << "id,image_path,text,label,split\na,,hello,HATE,train\nb,,x,MAYBE,train\n";
    write_config(bad);
    const auto data = run_cli(cfg + " -q ingest");
    CHECK(data.code == 2);
    CHECK(data.output.find("row 3") != std::string::npos);

    CHECK(run_cli(cfg + " --force nonsense ingest").code == 1);
    CHECK(run_cli("-c " + (dir / "missing.toml").string() + " ingest").code == 2);
    CHECK(run_cli(cfg + " --help").code == 0);
    std::ofstream(dir / "c.toml") << "task = \"Z\"\n";
    CHECK(run_cli(cfg + " ingest").code == 1);
}
