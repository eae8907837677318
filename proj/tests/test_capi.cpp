#include <cstdlib>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "mock_http.hpp"
#include "support.hpp"
#include "toolprune.h"
#include "toolprune/version.hpp"

using nlohmann::ordered_json;
using testsupport::MockChatServer;
using testsupport::TempDir;

namespace {

// Owns a string allocated by the library.
struct CStr {
  char* p = nullptr;
  ~CStr() { tp_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct Obs {
  tp_observation* p = nullptr;
  explicit Obs(const char* text) { REQUIRE(tp_observation_create(text, &p) == TP_OK); }
  ~Obs() { tp_observation_free(p); }
};

struct Spans {
  tp_spanset* p = nullptr;
  Spans(std::vector<uint32_t> pairs, uint32_t line_count) {
    REQUIRE(pairs.size() % 2 == 0);
    REQUIRE(tp_spanset_create(pairs.data(), pairs.size() / 2, line_count, &p) == TP_OK);
  }
  ~Spans() { tp_spanset_free(p); }
};

struct Pred {
  tp_prediction* p = nullptr;
  ~Pred() { tp_prediction_free(p); }
};

std::string dataset_jsonl() {
  return
      R"({"id":"a","source":"swe","tool":"grep","repo":"r/1","query":"socket timeout handling","tool_output":"socket opened\nsocket timeout after 30s\nretrying now","gold_spans":[[2,2]]})"
      "\n"
      R"({"id":"b","source":"swe","tool":"read_file","repo":"r/2","query":"parser entry point","tool_output":"def parse(tokens):\n    return tree\n# trailer","gold_spans":[[1,1]]})"
      "\n"
      R"({"id":"c","source":"swe","tool":"bash","repo":"r/3","query":"compiler diagnostics","tool_output":"cc -O2 main.c\nmain.c:4: warning unused\ndone","gold_spans":[[2,2]]})"
      "\n";
}

struct EnvVarGuard {
  explicit EnvVarGuard(const char* name) : name_(name) {
    const char* old = std::getenv(name);
    if (old) saved_ = old;
    had_ = old != nullptr;
  }
  ~EnvVarGuard() {
    if (had_) ::setenv(name_, saved_.c_str(), 1);
    else ::unsetenv(name_);
  }
  const char* name_;
  std::string saved_;
  bool had_ = false;
};

}  // namespace

TEST_CASE("tp_version matches the library version") {
  REQUIRE(tp_version() != nullptr);
  CHECK(std::string(tp_version()) == toolprune::kVersion);
}

TEST_CASE("observation handles expose lines and report failures") {
  Obs obs("alpha\nbeta\ngamma");
  CHECK(tp_observation_line_count(obs.p) == 3);

  const char* line = nullptr;
  REQUIRE(tp_observation_line(obs.p, 2, &line) == TP_OK);
  CHECK(std::string(line) == "beta");

  CHECK(tp_observation_line(obs.p, 0, &line) == TP_EINVAL);
  CHECK(std::string(tp_last_error()).empty() == false);
  CHECK(tp_observation_line(obs.p, 4, &line) == TP_EINVAL);

  CStr rendered;
  REQUIRE(tp_observation_render_numbered(obs.p, &rendered.p) == TP_OK);
  CHECK(rendered.str() == "1: alpha\n2: beta\n3: gamma");

  tp_observation* bad = nullptr;
  CHECK(tp_observation_create("", &bad) == TP_EINVAL);
  CHECK(bad == nullptr);
  CHECK(tp_observation_create(nullptr, &bad) == TP_EINVAL);
  CHECK(tp_observation_line_count(nullptr) == 0);
}

TEST_CASE("span set handles normalize, extract, and linearize") {
  Obs obs("a\nb\nc\nd\ne");

  Spans merged({1, 2, 3, 4}, 5);  // adjacent spans collapse
  CHECK(tp_spanset_size(merged.p) == 1);
  uint32_t start = 0;
  uint32_t end = 0;
  REQUIRE(tp_spanset_get(merged.p, 0, &start, &end) == TP_OK);
  CHECK(start == 1);
  CHECK(end == 4);
  CHECK(tp_spanset_get(merged.p, 1, &start, &end) == TP_EINVAL);

  Spans middle({2, 3}, 5);
  CStr text;
  REQUIRE(tp_spanset_extract(obs.p, middle.p, &text.p) == TP_OK);
  CHECK(text.str() == "b\nc");
  CStr block;
  REQUIRE(tp_spanset_linearize(obs.p, middle.p, &block.p) == TP_OK);
  CHECK(block.str() == "<relevant_lines>\n2: b\n3: c\n</relevant_lines>");

  Spans empty({}, 5);
  CStr empty_block;
  REQUIRE(tp_spanset_linearize(obs.p, empty.p, &empty_block.p) == TP_OK);
  CHECK(empty_block.str() == "<relevant_lines>\n</relevant_lines>");

  uint32_t inverted[] = {2, 1};
  tp_spanset* bad = nullptr;
  CHECK(tp_spanset_create(inverted, 1, 5, &bad) == TP_EINVAL);
  uint32_t out_of_range[] = {1, 9};
  CHECK(tp_spanset_create(out_of_range, 1, 5, &bad) == TP_EINVAL);
}

TEST_CASE("prediction handles surface indices, unaligned lines, and text") {
  Obs obs("alpha\nbeta\ngamma");
  Pred pred;
  REQUIRE(tp_parse_model_output(
              obs.p, "<relevant_lines>\n2: beta\nfree-floating refusal\n</relevant_lines>",
              &pred.p) == TP_OK);

  REQUIRE(tp_prediction_index_count(pred.p) == 1);
  uint32_t buf[4] = {0, 0, 0, 0};
  REQUIRE(tp_prediction_indices(pred.p, buf) == TP_OK);
  CHECK(buf[0] == 2);

  REQUIRE(tp_prediction_unaligned_count(pred.p) == 1);
  const char* stray = nullptr;
  REQUIRE(tp_prediction_unaligned_line(pred.p, 0, &stray) == TP_OK);
  CHECK(std::string(stray) == "free-floating refusal");
  CHECK(tp_prediction_unaligned_line(pred.p, 1, &stray) == TP_EINVAL);

  CStr plain;
  REQUIRE(tp_prediction_extract(obs.p, pred.p, 0, &plain.p) == TP_OK);
  CHECK(plain.str() == "beta");
  CStr numbered;
  REQUIRE(tp_prediction_extract(obs.p, pred.p, 1, &numbered.p) == TP_OK);
  CHECK(numbered.str() == "2: beta");
}

TEST_CASE("tp_prune dispatches on the method option") {
  Obs obs("one\ntwo\nthree\nfour\nfive");

  SUBCASE("first") {
    Pred pred;
    REQUIRE(tp_prune(obs.p, "anything", R"({"method":"first","keep_fraction":0.4})",
                     &pred.p) == TP_OK);
    uint32_t buf[2];
    REQUIRE(tp_prediction_index_count(pred.p) == 2);
    REQUIRE(tp_prediction_indices(pred.p, buf) == TP_OK);
    CHECK(buf[0] == 1);
    CHECK(buf[1] == 2);
  }
  SUBCASE("oracle echoes its gold option") {
    Pred pred;
    REQUIRE(tp_prune(obs.p, "anything", R"({"method":"oracle","gold":[[2,3]]})",
                     &pred.p) == TP_OK);
    REQUIRE(tp_prediction_index_count(pred.p) == 2);
    uint32_t buf[2];
    REQUIRE(tp_prediction_indices(pred.p, buf) == TP_OK);
    CHECK(buf[0] == 2);
    CHECK(buf[1] == 3);
  }
  SUBCASE("random is salted by example_id") {
    Pred first;
    REQUIRE(tp_prune(obs.p, "q", R"({"method":"random","seed":5,"example_id":"x"})",
                     &first.p) == TP_OK);
    Pred again;
    REQUIRE(tp_prune(obs.p, "q", R"({"method":"random","seed":5,"example_id":"x"})",
                     &again.p) == TP_OK);
    uint32_t a = 0;
    uint32_t b = 0;
    REQUIRE(tp_prediction_indices(first.p, &a) == TP_OK);
    REQUIRE(tp_prediction_indices(again.p, &b) == TP_OK);
    CHECK(a == b);
  }
  SUBCASE("option errors") {
    Pred pred;
    CHECK(tp_prune(obs.p, "q", R"({"methood":"first"})", &pred.p) == TP_EINVAL);
    CHECK(std::string(tp_last_error()).find("unknown option key") != std::string::npos);
    CHECK(tp_prune(obs.p, "q", R"({"method":"telepathy"})", &pred.p) == TP_EINVAL);
    CHECK(tp_prune(obs.p, "q", R"({"keep_fraction":0})", &pred.p) == TP_EINVAL);
    CHECK(tp_prune(obs.p, "q", R"({"method":"oracle"})", &pred.p) == TP_EINVAL);
    CHECK(tp_prune(obs.p, "q", R"({"method":"oracle","gold":[2,3]})", &pred.p) == TP_EINVAL);
    CHECK(tp_prune(obs.p, "q", R"({"method":"llm","model":"m"})", &pred.p) == TP_EINVAL);
    CHECK(tp_prune(obs.p, "q", "not json", &pred.p) == TP_EINVAL);
    CHECK(tp_prune(obs.p, "", "{}", &pred.p) == TP_EINVAL);  // empty query
  }
  SUBCASE("llm through a live endpoint") {
    MockChatServer server(
        MockChatServer::constant("<relevant_lines>\n3: three\n</relevant_lines>"));
    std::string options = std::string(R"({"method":"llm","model":"m1","endpoint":")") +
                          server.base_url() + R"("})";
    Pred pred;
    REQUIRE(tp_prune(obs.p, "which line is third", options.c_str(), &pred.p) == TP_OK);
    REQUIRE(tp_prediction_index_count(pred.p) == 1);
    uint32_t idx = 0;
    REQUIRE(tp_prediction_indices(pred.p, &idx) == TP_OK);
    CHECK(idx == 3);
  }
  SUBCASE("api_key_env must name a set variable") {
    Pred pred;
    EnvVarGuard guard("TOOLPRUNE_TEST_KEY");
    ::unsetenv("TOOLPRUNE_TEST_KEY");
    CHECK(tp_prune(obs.p, "q",
                   R"({"method":"llm","model":"m","endpoint":"http://127.0.0.1:9","api_key_env":"TOOLPRUNE_TEST_KEY"})",
                   &pred.p) == TP_EINVAL);
    CHECK(std::string(tp_last_error()).find("TOOLPRUNE_TEST_KEY") != std::string::npos);
  }
}

TEST_CASE("tp_fuzzy_similarity mirrors the library scorer") {
  CHECK(tp_fuzzy_similarity("Exit Code 137", "Exit Code: 137") ==
        doctest::Approx(11.0 / 13.0).epsilon(1e-12));
  CHECK(tp_fuzzy_similarity("same", "same") == 1.0);
  CHECK(tp_fuzzy_similarity(nullptr, "x") == 0.0);
}

TEST_CASE("tp_score_example fills the metrics struct") {
  Obs obs("alpha\nbeta\ngamma");
  Pred pred;
  REQUIRE(tp_parse_model_output(obs.p, "<relevant_lines>\n2: beta\n</relevant_lines>",
                                &pred.p) == TP_OK);
  Spans gold({2, 2}, 3);

  tp_metrics_row row;
  REQUIRE(tp_score_example(obs.p, pred.p, gold.p, &row) == TP_OK);
  CHECK(row.precision == 1.0);
  CHECK(row.recall == 1.0);
  CHECK(row.f1 == 1.0);
  CHECK(row.strict_f1 == 1.0);
  CHECK(row.exact_match == 1);
  CHECK(row.is_negative == 0);
  CHECK(row.empty_prediction == 0);
  CHECK(row.predicted_lines == 1);
  CHECK(row.gold_lines == 1);
  CHECK(row.unaligned_lines == 0);
  CHECK(row.compression > 0.0);

  CHECK(tp_score_example(obs.p, pred.p, gold.p, nullptr) == TP_EINVAL);
}

TEST_CASE("tp_eval_file writes identical bytes for any worker count") {
  TempDir tmp;
  testsupport::write_file(tmp.file("ds.jsonl"), dataset_jsonl());
  std::string path = tmp.file("ds.jsonl").string();

  EnvVarGuard guard("SOURCE_DATE_EPOCH");
  ::setenv("SOURCE_DATE_EPOCH", "1755129600", 1);

  CStr report1, rows1, report4, rows4;
  REQUIRE(tp_eval_file(path.c_str(), R"({"method":"oracle","workers":1})", &report1.p,
                       &rows1.p) == TP_OK);
  REQUIRE(tp_eval_file(path.c_str(), R"({"method":"oracle","workers":4})", &report4.p,
                       &rows4.p) == TP_OK);
  CHECK(report1.str() == report4.str());
  CHECK(rows1.str() == rows4.str());

  ordered_json report = ordered_json::parse(report1.str());
  CHECK(report["overall"]["f1"] == 1.0);
  CHECK(report["overall"]["count"] == 3);
  CHECK(report["manifest"]["config"]["method"] == "oracle");
  CHECK(report["manifest"]["dataset_sha256"].get<std::string>().size() == 64);
  CHECK(report1.str().find("workers") == std::string::npos);

  std::size_t lines = 0;
  for (char c : rows1.str()) lines += c == '\n';
  CHECK(lines == 3);

  CStr ignored;
  CHECK(tp_eval_file(path.c_str(), R"({"wokers":2})", &ignored.p, nullptr) == TP_EINVAL);
  CHECK(tp_eval_file(tmp.file("absent.jsonl").string().c_str(), "{}", &ignored.p,
                     nullptr) == TP_EIO);
}

TEST_CASE("tp_tradeoff_csv renders sorted rows") {
  const char* reports[] = {
      R"({"system":"bm25","overall":{"compression":0.9,"recall":0.7203}})",
      R"({"system":"first_n","overall":{"compression":0.9,"recall":0.31}})",
  };
  CStr csv;
  REQUIRE(tp_tradeoff_csv(reports, 2, &csv.p) == TP_OK);
  CHECK(csv.str() ==
        "system,compression,recall\nbm25,0.9000,0.7203\nfirst_n,0.9000,0.3100\n");

  const char* bad[] = {R"({"overall":{}})"};
  CHECK(tp_tradeoff_csv(bad, 1, &csv.p) == TP_EPARSE);
}

TEST_CASE("dataset lifecycle through the C surface") {
  TempDir tmp;
  testsupport::write_file(tmp.file("ds.jsonl"), dataset_jsonl());
  std::string path = tmp.file("ds.jsonl").string();

  uint64_t count = 0;
  REQUIRE(tp_dataset_validate(path.c_str(), &count) == TP_OK);
  CHECK(count == 3);

  testsupport::write_file(tmp.file("dup.jsonl"), dataset_jsonl() + dataset_jsonl());
  CHECK(tp_dataset_validate(tmp.file("dup.jsonl").string().c_str(), &count) == TP_EPARSE);
  CHECK(std::string(tp_last_error()).find("duplicate id") != std::string::npos);

  CStr stats;
  REQUIRE(tp_dataset_stats(path.c_str(), &stats.p) == TP_OK);
  ordered_json stats_json = ordered_json::parse(stats.str());
  CHECK(stats_json["total"] == 3);
  CHECK(stats_json["table"].get<std::string>().find("total") != std::string::npos);

  std::string split_path = tmp.file("split.jsonl").string();
  REQUIRE(tp_dataset_split(path.c_str(), split_path.c_str(), R"({"seed":"split-v1"})") ==
          TP_OK);
  uint64_t split_count = 0;
  REQUIRE(tp_dataset_validate(split_path.c_str(), &split_count) == TP_OK);
  CHECK(split_count == 3);
  CHECK(tp_dataset_split(path.c_str(), split_path.c_str(),
                         R"({"train":0.5,"dev":0.2,"test":0.2})") == TP_EINVAL);
  CHECK(tp_dataset_split(path.c_str(), split_path.c_str(), R"({"val":0.5})") == TP_EINVAL);

  CStr curation;
  REQUIRE(tp_dataset_curate(path.c_str(), tmp.file("kept.jsonl").string().c_str(),
                            tmp.file("review.jsonl").string().c_str(),
                            &curation.p) == TP_OK);
  ordered_json curation_json = ordered_json::parse(curation.str());
  CHECK(curation_json["counts"]["kept"] == 3);
  uint64_t kept_count = 0;
  REQUIRE(tp_dataset_validate(tmp.file("kept.jsonl").string().c_str(), &kept_count) ==
          TP_OK);
  CHECK(kept_count == 3);

  std::string neg_path = tmp.file("negs.jsonl").string();
  REQUIRE(tp_dataset_negatives(path.c_str(), neg_path.c_str(), R"({"count":2,"seed":3})") ==
          TP_OK);
  uint64_t neg_count = 0;
  REQUIRE(tp_dataset_validate(neg_path.c_str(), &neg_count) == TP_OK);
  CHECK(neg_count == 2);
  CHECK(testsupport::read_file(neg_path).find("\"neg-") != std::string::npos);

  std::string sft_path = tmp.file("sft.jsonl").string();
  REQUIRE(tp_dataset_export_sft(path.c_str(), sft_path.c_str()) == TP_OK);
  std::string sft = testsupport::read_file(sft_path);
  CHECK(sft.find("\"prompt\"") != std::string::npos);
  CHECK(sft.find("\"completion\"") != std::string::npos);
}

TEST_CASE("tp_dataset_label labels raws through an endpoint and dedups ids") {
  // Calls alternate stage 1 (query) and stage 2 (spans) for each raw.
  MockChatServer server([](int call_index, const ordered_json&) {
    MockChatServer::Reply reply;
    reply.content = call_index % 2 == 0 ? "what does the error say" : "[[2, 2]]";
    return reply;
  });

  TempDir tmp;
  std::string raw_row =
      R"({"tool":"bash","background":"debugging a crash","raw_text":"ok\nerror: kaboom\ndone"})";
  testsupport::write_file(tmp.file("raws.jsonl"), raw_row + "\n" + raw_row + "\n");

  std::string options =
      std::string(R"({"model":"teacher-1","endpoint":")") + server.base_url() + R"("})";
  CStr skips;
  REQUIRE(tp_dataset_label(tmp.file("raws.jsonl").string().c_str(),
                           tmp.file("labeled.jsonl").string().c_str(), options.c_str(),
                           &skips.p) == TP_OK);

  ordered_json skip_report = ordered_json::parse(skips.str());
  CHECK(skip_report["labeled"] == 1);
  CHECK(skip_report["skips"]["duplicate_id"] == 1);

  uint64_t labeled = 0;
  REQUIRE(tp_dataset_validate(tmp.file("labeled.jsonl").string().c_str(), &labeled) ==
          TP_OK);
  CHECK(labeled == 1);
  std::string row = testsupport::read_file(tmp.file("labeled.jsonl"));
  CHECK(row.find("\"gen-") != std::string::npos);
  CHECK(row.find("synthetic_pos") != std::string::npos);
  CHECK(server.request_count() == 4);

  CHECK(tp_dataset_label(tmp.file("raws.jsonl").string().c_str(),
                         tmp.file("labeled.jsonl").string().c_str(), "{}", nullptr) ==
        TP_EINVAL);
}
