#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <string>

#include "germrh/cli.hpp"

namespace germrh::cli {
namespace {

std::string spec(const std::string& name) { return std::string(GERMRH_SPEC_DIR) + "/" + name; }

struct ToolRun {
  int code = -1;
  std::string out;
};

ToolRun run_tool(const std::string& args) {
  ToolRun r;
  const std::string cmd = std::string(GERMRH_TOOL) + " " + args + " 2>&1";
  FILE* f = popen(cmd.c_str(), "r");
  if (!f) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, f)) r.out += buf;
  const int st = pclose(f);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Internal;
}

TEST(Spec, ClassifyConcreteCovers) {
  Report rep = cmd_classify(parse_spec_file(spec("classify_p3.yaml")));
  const json& c = rep.data["covers"];
  ASSERT_EQ(c.size(), 4u);
  EXPECT_EQ(c[0]["tag"], "mu_p");
  EXPECT_EQ(c[0]["m"], 0);
  EXPECT_EQ(c[0]["c"], 0);
  EXPECT_EQ(c[1]["tag"], "etale");
  EXPECT_EQ(c[1]["c"], 2);
  EXPECT_EQ(c[3]["tag"], "H_1");
  EXPECT_EQ(rep.exit, kOk);
}

TEST(Spec, DigitOutOfRangeReportsLine) {
  try {
    parse_spec_file(spec("bad_digits.yaml"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
    EXPECT_NE(std::string(e.what()).find("line 6"), std::string::npos) << e.what();
  }
}

TEST(Spec, SchemaErrors) {
  EXPECT_EQ(kind_of([] { parse_spec_text("ring: {p: 4}\n"); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { parse_spec_text("ring: {p: 3}\ncovers:\n  - {name: a, tag: etale, m: -2, colour: red}\n"); }),
            ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { parse_spec_text("ring: {p: 3}\ncovers:\n  - {name: a, kind: kummer, tag: mu_p, u: {1: 1}}\n"); }),
            ErrorKind::InvalidInput);
  try {
    parse_spec_text("ring: {p: 3}\ncovers:\n  - {name: a, tag: etale, m: -2}\n  - {name: b, tag: hn, m: 1}\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(Spec, PropagateEtalePair) {
  Report rep = cmd_propagate(parse_spec_file(spec("propagate_etale.yaml")));
  EXPECT_EQ(rep.data["m1p"], -2);
  EXPECT_EQ(rep.data["m2p"], -11);
  EXPECT_EQ(rep.data["ds"], 26);
}

TEST(Spec, MuMuNeedsOracleFlag) {
  SpecFile f = parse_spec_file(spec("fixture_mu_mu.yaml"));
  try {
    cmd_propagate(f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OracleRequired);
    EXPECT_EQ(exit_code(e.kind()), kInput);
    EXPECT_NE(std::string(e.what()).find("--oracle"), std::string::npos);
  }
  Options o;
  o.oracle = true;
  Report rep = cmd_propagate(f, o);
  EXPECT_EQ(rep.data["m1p"], 2);
  EXPECT_EQ(rep.data["m2p"], 2);
  EXPECT_EQ(rep.data["oracle"][0]["upper_tag"], "H_2");
}

TEST(Spec, TorsorCheckReason) {
  SpecFile f = parse_spec_file(spec("torsor_mu_mu.yaml"));
  Options o;
  o.oracle = true;
  Report rep = cmd_torsor_check(f, o);
  EXPECT_EQ(rep.data["torsor"], false);
  EXPECT_EQ(rep.data["reason"], "0 etale factors, need >= 1");
  EXPECT_EQ(rep.data["reduced"], false);
  EXPECT_EQ(rep.exit, kOk);
}

TEST(Spec, GenusBlock) {
  Report rep = cmd_genus(parse_spec_file(spec("genus_pp.yaml")));
  EXPECT_EQ(rep.data["g_y"], 1);
  EXPECT_EQ(rep.data["smooth"], false);
}

TEST(Spec, Tower) {
  Report rep = cmd_tower(parse_spec_file(spec("tower_etale.yaml")));
  EXPECT_EQ(rep.data["edges"]["c1pp"], 38);
  EXPECT_EQ(rep.data["closed_form_match"], true);
}

TEST(Spec, VerifyPair) {
  Report rep = cmd_verify_spec(parse_spec_file(spec("verify_pair.yaml")));
  EXPECT_EQ(rep.data["match"], true);
  EXPECT_EQ(rep.data["oracle"][0]["m1p"], 14);
  EXPECT_EQ(rep.data["oracle"][1]["m1p"], -4);
}

TEST(Json, PropagationRoundTrip) {
  for (const PPInput& in : {PPInput{abstract_torsor(GroupTag::etale(), -4, 3, 3), abstract_torsor(GroupTag::mu(), 2, 3, 3), 3, 3},
                            PPInput{abstract_torsor(GroupTag::hn(1), 2, 3, 3), abstract_torsor(GroupTag::mu(), 1, 3, 3), 3, 3}}) {
    PPResult r = propagate(in);
    json j = json::parse(pp_json(r).dump());
    EXPECT_EQ(pp_json(pp_from_json(j)), j);
  }
  TorsorData td = abstract_torsor(GroupTag::hn(2), -1, 3, 3);
  TorsorData back = invariants_from_json(json::parse(invariants_json(td).dump()));
  EXPECT_EQ(back.tag, td.tag);
  EXPECT_EQ(back.m, td.m);
  EXPECT_EQ(back.delta, td.delta);
}

TEST(Json, ReportReparses) {
  Report rep = cmd_classify(parse_spec_file(spec("classify_p3.yaml")));
  EXPECT_EQ(json::parse(rep.data.dump(2)), rep.data);
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code(ErrorKind::InvalidInput), 1);
  EXPECT_EQ(exit_code(ErrorKind::OracleRequired), 1);
  EXPECT_EQ(exit_code(ErrorKind::Internal), 2);
  EXPECT_EQ(exit_code(ErrorKind::Unstable), 3);
  EXPECT_EQ(exit_code(ErrorKind::PrecisionExhausted), 3);
  EXPECT_EQ(exit_code(ErrorKind::WindowExhausted), 3);
}

TEST(Verify, SmokeGridIsGreen) {
  Report rep = cmd_verify_grid("smoke");
  EXPECT_EQ(rep.exit, kOk) << rep.text;
  EXPECT_EQ(rep.data["mismatches"], 0);
  EXPECT_EQ(rep.data["fixture"]["ok"], true);
}

TEST(Verify, CorruptedTableIsCaught) {
  FormulaFn bad = [](const PPInput& in) {
    PPResult r = propagate(in);
    r.m1p += 1;
    return r;
  };
  Report rep = cmd_verify_grid("smoke", {}, bad);
  EXPECT_EQ(rep.exit, kMismatch);
  EXPECT_GT(rep.data["mismatches"].get<int>(), 0);
}

TEST(Tool, ExitCodes) {
  ToolRun ok = run_tool("propagate --json --spec " + spec("propagate_etale.yaml"));
  EXPECT_EQ(ok.code, 0) << ok.out;
  json j = json::parse(ok.out);
  EXPECT_EQ(j["m1p"], -2);
  EXPECT_EQ(j["m2p"], -11);
  EXPECT_EQ(j["ds"], 26);

  ToolRun bad = run_tool("classify --spec " + spec("bad_digits.yaml"));
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("line 6"), std::string::npos) << bad.out;

  ToolRun need = run_tool("propagate --spec " + spec("fixture_mu_mu.yaml"));
  EXPECT_EQ(need.code, 1);
  EXPECT_NE(need.out.find("--oracle"), std::string::npos);

  ToolRun missing = run_tool("classify --spec /nonexistent.yaml");
  EXPECT_EQ(missing.code, 1);

  ToolRun low = run_tool("propagate --oracle --precision 4 --spec " + spec("verify_pair.yaml"));
  EXPECT_EQ(low.code, 3) << low.out;
}

TEST(Tool, GenusAndTorsorCheck) {
  ToolRun g = run_tool("genus --json --spec " + spec("genus_pp.yaml"));
  EXPECT_EQ(g.code, 0);
  EXPECT_EQ(json::parse(g.out)["g_y"], 1);
  ToolRun t = run_tool("torsor-check --oracle --json --spec " + spec("torsor_mu_mu.yaml"));
  EXPECT_EQ(t.code, 0);
  EXPECT_EQ(json::parse(t.out)["torsor"], false);
}

}  // namespace
}  // namespace germrh::cli
