#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "mock_http.hpp"
#include "support.hpp"

using nlohmann::ordered_json;
using testsupport::MockChatServer;
using testsupport::TempDir;

namespace {

std::string cli_path() {
  const char* path = std::getenv("TOOLPRUNE_CLI");
  REQUIRE_MESSAGE(path != nullptr, "TOOLPRUNE_CLI must point at the CLI binary");
  return path;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

// Runs the CLI through the shell with stdin redirected (default: /dev/null so
// filter commands never hang waiting for a pipe).
RunResult run_cli(const std::string& args, const std::string& stdin_path = "/dev/null",
                  const std::string& env_prefix = "") {
  std::string cmd = env_prefix + shell_quote(cli_path()) + " " + args + " < " +
                    shell_quote(stdin_path) + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult result;
  char buf[4096];
  size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) result.output.append(buf, n);
  int status = ::pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string dataset_jsonl() {
  return
      R"({"id":"a","source":"swe","tool":"grep","repo":"r/1","query":"socket timeout handling","tool_output":"socket opened\nsocket timeout after 30s\nretrying now","gold_spans":[[2,2]]})"
      "\n"
      R"({"id":"b","source":"swe","tool":"read_file","repo":"r/2","query":"parser entry point","tool_output":"def parse(tokens):\n    return tree\n# trailer","gold_spans":[[1,1]]})"
      "\n"
      R"({"id":"c","source":"swe","tool":"bash","repo":"r/3","query":"compiler diagnostics","tool_output":"cc -O2 main.c\nmain.c:4: warning unused\ndone","gold_spans":[[2,2]]})"
      "\n";
}

}  // namespace

TEST_CASE("cli --version prints the library version") {
  RunResult r = run_cli("--version");
  CHECK(r.exit_code == 0);
  CHECK_FALSE(r.output.empty());
}

TEST_CASE("cli prune filters piped tool output") {
  TempDir tmp;
  testsupport::write_file(tmp.file("obs.txt"), "one\ntwo\nthree\nfour\nfive\n");
  std::string obs = tmp.file("obs.txt").string();

  RunResult r = run_cli("prune --query q --method first --keep-fraction 0.4",
                        obs);
  CHECK(r.exit_code == 0);
  CHECK(r.output == "one\ntwo\n");

  r = run_cli("prune --query q --method first --keep-fraction 0.4 --numbered", obs);
  CHECK(r.exit_code == 0);
  CHECK(r.output == "1: one\n2: two\n");

  r = run_cli("prune --query q --method last --keep-fraction 0.2", obs);
  CHECK(r.output == "five\n");

  // bm25 pulls the lexically matching line regardless of position.
  r = run_cli("prune --query four --method bm25 --keep-fraction 0.2", obs);
  CHECK(r.exit_code == 0);
  CHECK(r.output == "four\n");

  // --input reads a file instead of stdin.
  r = run_cli("prune --query q --method first --keep-fraction 0.2 --input " +
              shell_quote(obs));
  CHECK(r.exit_code == 0);
  CHECK(r.output == "one\n");

  r = run_cli("prune --query q --method oracle --gold '[[2,3]]'", obs);
  CHECK(r.exit_code == 0);
  CHECK(r.output == "two\nthree\n");

  // An empty selection prints nothing but still succeeds.
  r = run_cli("prune --query q --method oracle --gold '[]'", obs);
  CHECK(r.exit_code == 0);
  CHECK(r.output.empty());
}

TEST_CASE("cli exits 2 on usage and data errors") {
  TempDir tmp;
  testsupport::write_file(tmp.file("obs.txt"), "one\ntwo\n");
  std::string obs = tmp.file("obs.txt").string();

  CHECK(run_cli("prune", obs).exit_code == 2);  // missing --query
  CHECK(run_cli("prune --query q --method telepathy", obs).exit_code == 2);
  CHECK(run_cli("prune --query q --gold 'not json'", obs).exit_code == 2);
  CHECK(run_cli("prune --query q --keep-fraction 0", obs).exit_code == 2);
  CHECK(run_cli("prune --query q").exit_code == 2);  // empty stdin
  CHECK(run_cli("prune --query q --input /does/not/exist").exit_code == 2);
  CHECK(run_cli("eval --method bm25").exit_code == 2);  // missing --dataset
  CHECK(run_cli("eval --dataset /does/not/exist.jsonl").exit_code == 2);
  CHECK(run_cli("dataset validate /does/not/exist.jsonl").exit_code == 2);
  CHECK(run_cli("no-such-command").exit_code == 2);

  testsupport::write_file(tmp.file("dup.jsonl"), dataset_jsonl() + dataset_jsonl());
  RunResult r = run_cli("dataset validate " + shell_quote(tmp.file("dup.jsonl").string()));
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("duplicate id") != std::string::npos);
}

TEST_CASE("cli exits 3 when the chat endpoint is unreachable") {
  TempDir tmp;
  testsupport::write_file(tmp.file("obs.txt"), "one\ntwo\n");
  RunResult r = run_cli(
      "prune --query q --method llm --model m --endpoint http://127.0.0.1:9",
      tmp.file("obs.txt").string());
  CHECK(r.exit_code == 3);
}

TEST_CASE("cli eval writes byte-identical reports for any worker count") {
  TempDir tmp;
  testsupport::write_file(tmp.file("ds.jsonl"), dataset_jsonl());
  std::string ds = shell_quote(tmp.file("ds.jsonl").string());
  std::string pinned = "SOURCE_DATE_EPOCH=1755129600 ";

  RunResult r1 = run_cli("eval --dataset " + ds +
                             " --method oracle --workers 1 --out " +
                             shell_quote(tmp.file("r1.json").string()) +
                             " --per-example-out " +
                             shell_quote(tmp.file("p1.jsonl").string()),
                         "/dev/null", pinned);
  REQUIRE(r1.exit_code == 0);
  RunResult r4 = run_cli("eval --dataset " + ds +
                             " --method oracle --workers 4 --out " +
                             shell_quote(tmp.file("r4.json").string()) +
                             " --per-example-out " +
                             shell_quote(tmp.file("p4.jsonl").string()),
                         "/dev/null", pinned);
  REQUIRE(r4.exit_code == 0);

  std::string report1 = testsupport::read_file(tmp.file("r1.json"));
  CHECK(report1 == testsupport::read_file(tmp.file("r4.json")));
  CHECK(testsupport::read_file(tmp.file("p1.jsonl")) ==
        testsupport::read_file(tmp.file("p4.jsonl")));

  ordered_json report = ordered_json::parse(report1);
  CHECK(report["overall"]["f1"] == 1.0);
  CHECK(report["overall"]["count"] == 3);
  CHECK(report["system"] == "oracle");

  // Without --out the report lands on stdout.
  RunResult piped = run_cli("eval --dataset " + ds + " --method first");
  CHECK(piped.exit_code == 0);
  CHECK(piped.output.find("\"overall\"") != std::string::npos);

  CHECK(run_cli("eval --dataset " + ds + " --split dev").exit_code == 2);
}

TEST_CASE("cli report builds the trade-off CSV") {
  TempDir tmp;
  testsupport::write_file(
      tmp.file("r1.json"),
      R"({"system":"bm25","overall":{"compression":0.9,"recall":0.7203}})");
  testsupport::write_file(
      tmp.file("r2.json"),
      R"({"system":"first_n","overall":{"compression":0.9,"recall":0.31}})");

  RunResult r = run_cli("report " + shell_quote(tmp.file("r1.json").string()) + " " +
                        shell_quote(tmp.file("r2.json").string()) + " --out " +
                        shell_quote(tmp.file("tradeoff.csv").string()));
  REQUIRE(r.exit_code == 0);
  CHECK(testsupport::read_file(tmp.file("tradeoff.csv")) ==
        "system,compression,recall\nbm25,0.9000,0.7203\nfirst_n,0.9000,0.3100\n");

  testsupport::write_file(tmp.file("bad.json"), "{}");
  CHECK(run_cli("report " + shell_quote(tmp.file("bad.json").string())).exit_code == 2);
}

TEST_CASE("cli dataset lifecycle round trip") {
  TempDir tmp;
  testsupport::write_file(tmp.file("ds.jsonl"), dataset_jsonl());
  std::string ds = shell_quote(tmp.file("ds.jsonl").string());

  RunResult r = run_cli("dataset validate " + ds);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("3 examples, all valid") != std::string::npos);

  r = run_cli("dataset stats " + ds);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("total") != std::string::npos);
  r = run_cli("dataset stats --json " + ds);
  CHECK(r.exit_code == 0);
  ordered_json stats = ordered_json::parse(r.output);
  CHECK(stats["total"] == 3);
  CHECK(stats.contains("table") == false);

  std::string split_out = tmp.file("split.jsonl").string();
  r = run_cli("dataset split " + ds + " --out " + shell_quote(split_out));
  CHECK(r.exit_code == 0);
  CHECK(testsupport::read_file(split_out).find("\"split\"") != std::string::npos);
  CHECK(run_cli("dataset split " + ds + " --out " + shell_quote(split_out) +
                " --train 0.5 --dev 0.2 --test 0.2")
            .exit_code == 2);

  r = run_cli("dataset curate " + ds + " --out " +
              shell_quote(tmp.file("kept.jsonl").string()) + " --review-out " +
              shell_quote(tmp.file("review.jsonl").string()) + " --report-out " +
              shell_quote(tmp.file("curation.json").string()));
  CHECK(r.exit_code == 0);
  ordered_json curation = ordered_json::parse(testsupport::read_file(tmp.file("curation.json")));
  CHECK(curation["counts"]["kept"] == 3);
  CHECK(run_cli("dataset validate " + shell_quote(tmp.file("kept.jsonl").string()))
            .exit_code == 0);

  std::string neg_out = tmp.file("negs.jsonl").string();
  r = run_cli("dataset negatives " + ds + " --out " + shell_quote(neg_out) +
              " --count 2 --seed 3");
  CHECK(r.exit_code == 0);
  r = run_cli("dataset validate " + shell_quote(neg_out));
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("2 examples") != std::string::npos);

  std::string sft_out = tmp.file("sft.jsonl").string();
  r = run_cli("dataset export-sft " + ds + " --out " + shell_quote(sft_out));
  CHECK(r.exit_code == 0);
  std::string sft = testsupport::read_file(sft_out);
  CHECK(sft.find("\"prompt\"") != std::string::npos);
  CHECK(sft.find("\"completion\"") != std::string::npos);
}

TEST_CASE("cli dataset label drives the teacher endpoint") {
  MockChatServer server([](int call_index, const ordered_json&) {
    MockChatServer::Reply reply;
    reply.content = call_index % 2 == 0 ? "what does the error say" : "[[2, 2]]";
    return reply;
  });

  TempDir tmp;
  testsupport::write_file(
      tmp.file("raws.jsonl"),
      R"({"tool":"bash","background":"debugging","raw_text":"ok\nerror: kaboom\ndone"})"
      "\n");

  RunResult r = run_cli("dataset label " + shell_quote(tmp.file("raws.jsonl").string()) +
                        " --out " + shell_quote(tmp.file("labeled.jsonl").string()) +
                        " --skips-out " + shell_quote(tmp.file("skips.json").string()) +
                        " --model teacher-1 --endpoint " + shell_quote(server.base_url()));
  REQUIRE(r.exit_code == 0);

  ordered_json skips = ordered_json::parse(testsupport::read_file(tmp.file("skips.json")));
  CHECK(skips["labeled"] == 1);
  r = run_cli("dataset validate " + shell_quote(tmp.file("labeled.jsonl").string()));
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("1 examples") != std::string::npos);

  // Without an endpoint the command is a usage error.
  CHECK(run_cli("dataset label " + shell_quote(tmp.file("raws.jsonl").string()) +
                " --out " + shell_quote(tmp.file("x.jsonl").string()))
            .exit_code == 2);
}
