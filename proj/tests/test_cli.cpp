#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "stsn/cli/commands.hpp"
#include "stsn/data/synthetic.hpp"
#include "stsn/training/checkpoint.hpp"

using namespace stsn;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string error_category(const Run& r) {
  return nlohmann::json::parse(r.err)["error"]["category"].get<std::string>();
}

// A scratch directory with a tiny config and the synthetic corpus.
struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / "stsn_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    save_corpus(make_synthetic_corpus({}), dir / "train.json");
    write_text_file_atomic(dir / "tiny.cfg",
                           "encoder.dim = 8\nencoder.max_positions = 40\nstack.layers = 1\n"
                           "stack.heads = 2\ndecoder.label_dim = 4\ndecoder.width_dim = 4\n"
                           "train.epochs = 2\ntrain.learning_rate = 1e-3\n");
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  const auto none = run({});
  CHECK(none.code == cli::kExitUsage);
  CHECK(error_category(none) == "usage");
  const auto bogus = run({"frobnicate"});
  CHECK(bogus.code == cli::kExitUsage);
  const auto missing = run({"predict", "--input", "x.json"});
  CHECK(missing.code == cli::kExitUsage);
  CHECK(run({"evaluate", "--gold", "/nonexistent.json"}).code == cli::kExitUsage);
  const auto help = run({"--help"});
  CHECK(help.code == cli::kExitOk);
  CHECK(help.out.find("train") != std::string::npos);
  CHECK(help.out.find("validate-data") != std::string::npos);
}

TEST_CASE("error categories map to exit codes") {
  for (const char* c : {"usage", "io", "parse", "validation", "config", "vocabulary", "checkpoint"}) {
    CHECK(cli::exit_code_for(c) == cli::kExitUsage);
  }
  CHECK(cli::exit_code_for("numeric") == cli::kExitInternal);
  CHECK(cli::exit_code_for("internal") == cli::kExitInternal);

  const auto io = run({"validate-data", "--input", "/nonexistent/corpus.json"});
  CHECK(io.code == 2);
  CHECK(error_category(io) == "io");
}

TEST_CASE("ablation variants") {
  const auto variants = cli::ablation_variants();
  REQUIRE(variants.size() == 10);
  CHECK(variants[0].label == "1 AttentionLayer");
  CHECK(variants[2].label == "3 AttentionLayers");
  std::vector<std::string> labels;
  for (const auto& v : variants) labels.push_back(v.label);
  for (const char* l : {"STSN", "-LabelEmbedding", "-E&R-L-A", "-AttentionLayer"}) {
    CHECK(std::find(labels.begin(), labels.end(), l) != labels.end());
  }
}

TEST_CASE("config precedence: file, then environment seed, then overrides") {
  Workspace ws;
  CHECK(cli::resolve_config(ws.path("tiny.cfg"), {}).get_int("encoder.dim") == 8);
  CHECK(cli::resolve_config(ws.path("tiny.cfg"), {"encoder.dim=16"}).get_int("encoder.dim") == 16);
  ::setenv("STSN_SEED", "99", 1);
  CHECK(cli::resolve_config("", {}).get_int("seed") == 99);
  CHECK(cli::resolve_config("", {"seed=5"}).get_int("seed") == 5);
  ::unsetenv("STSN_SEED");
  CHECK(cli::resolve_config("", {}).get_int("seed") == 13);
}

TEST_CASE("train, predict and evaluate end to end") {
  Workspace ws;
  const auto out = ws.path("run");
  const auto trained = run({"train", "--config", ws.path("tiny.cfg"), "--set", "seed=21", "--train",
                            ws.path("train.json"), "--dev", ws.path("train.json"), "--output", out});
  REQUIRE(trained.code == 0);
  for (const char* f : {"config.txt", "train_log.jsonl", "best.ckpt", "last.ckpt"}) {
    CHECK(fs::exists(fs::path(out) / f));
  }
  const auto ckpt = load_checkpoint(fs::path(out) / "last.ckpt");
  CHECK(ckpt.config.get_int("seed") == 21);
  CHECK(ckpt.config.get_int("encoder.dim") == 8);

  const auto p1 = run({"predict", "--checkpoint", out + "/last.ckpt", "--input",
                       ws.path("train.json"), "--output", ws.path("p1.json")});
  const auto p2 = run({"predict", "--checkpoint", out + "/last.ckpt", "--input",
                       ws.path("train.json"), "--output", ws.path("p2.json")});
  REQUIRE(p1.code == 0);
  REQUIRE(p2.code == 0);
  CHECK(read_text_file(ws.path("p1.json")) == read_text_file(ws.path("p2.json")));
  const auto to_stdout =
      run({"predict", "--checkpoint", out + "/last.ckpt", "--input", ws.path("train.json")});
  CHECK(to_stdout.out == read_text_file(ws.path("p1.json")));

  const auto scored = run({"evaluate", "--gold", ws.path("train.json"), "--predictions",
                           ws.path("p1.json"), "--format", "json", "--breakdown", "entity-length",
                           "--output", ws.path("eval")});
  REQUIRE(scored.code == 0);
  const auto report = nlohmann::json::parse(scored.out);
  CHECK(report.contains("re_plus"));
  CHECK(report["breakdown_entity_length"].is_array());
  CHECK(fs::exists(ws.dir / "eval" / "breakdown_entity_length.json"));
  const auto direct = run({"evaluate", "--gold", ws.path("train.json"), "--checkpoint",
                           out + "/last.ckpt", "--format", "json"});
  CHECK(nlohmann::json::parse(direct.out)["re_plus"] == report["re_plus"]);
  CHECK(run({"evaluate", "--gold", ws.path("train.json"), "--checkpoint", out + "/last.ckpt",
             "--predictions", ws.path("p1.json")})
            .code == 2);

  save_corpus({}, ws.dir / "empty.json");
  const auto empty =
      run({"predict", "--checkpoint", out + "/last.ckpt", "--input", ws.path("empty.json")});
  CHECK(empty.code == 0);
  CHECK(nlohmann::json::parse(empty.out).empty());

  const auto span_head = run({"evaluate", "--gold", ws.path("train.json"), "--predictions",
                              ws.path("p1.json"), "--set", "eval.match=span_head"});
  CHECK(span_head.code == 2);
  CHECK(error_category(span_head) == "config");

  const auto validated = run({"validate-data", "--input", ws.path("train.json")});
  CHECK(validated.code == 0);
}

TEST_CASE("ablate runs only the requested variants") {
  Workspace ws;
  const auto r = run({"ablate", "--config", ws.path("tiny.cfg"), "--train", ws.path("train.json"),
                      "--variants", "no_label_embedding", "--output", ws.path("abl")});
  REQUIRE(r.code == 0);
  const auto rows = nlohmann::json::parse(read_text_file(ws.dir / "abl" / "ablation.json"));
  REQUIRE(rows.size() == 1);
  CHECK(rows[0]["variant"] == "no_label_embedding");
  CHECK(rows[0]["label"] == "-LabelEmbedding");
  CHECK(run({"ablate", "--train", ws.path("train.json"), "--variants", "bogus"}).code == 2);
}

TEST_CASE("the installed binary reports exit codes") {
  const char* binary = std::getenv("STSN_CLI");
  if (binary == nullptr) return;
  const std::string quiet = " >/dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system((std::string(binary) + quiet).c_str())) == 2);
  CHECK(WEXITSTATUS(std::system((std::string(binary) + " --help" + quiet).c_str())) == 0);
  CHECK(WEXITSTATUS(std::system(
            (std::string(binary) + " validate-data --input /nonexistent.json" + quiet).c_str())) ==
        2);
}
