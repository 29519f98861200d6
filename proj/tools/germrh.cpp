// germrh: classify torsors over a boundary, propagate conductors to level two,
// towers, local genus, fibre-product check, oracle verification.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "germrh/cli.hpp"

namespace {

using namespace germrh;

int emit(const cli::Report& rep, bool as_json) {
  if (as_json)
    std::cout << rep.data.dump(2) << "\n";
  else
    std::cout << rep.text;
  return rep.exit;
}

int emit_error(const Error& e, bool as_json) {
  const int code = cli::exit_code(e.kind());
  if (as_json) {
    std::cout << cli::json{{"error", e.what()}, {"exit", code}}.dump(2) << "\n";
  } else {
    std::cerr << "germrh: " << e.what() << "\n";
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conductors, differents and genus of type-(p,p) covers over a boundary"};
  app.require_subcommand(1);

  std::string spec_path, grid = "p3";
  bool as_json = false;
  cli::Options opt;

  auto add_common = [&](CLI::App* sub, bool spec_required) {
    auto* o = sub->add_option("--spec", spec_path, "YAML cover specification");
    if (spec_required) o->required()->check(CLI::ExistingFile);
    sub->add_flag("--json", as_json, "machine-readable output");
    sub->add_flag("--oracle", opt.oracle, "run the oracle");
    sub->add_option("--precision", opt.precision, "pi-adic precision N for the oracle")->check(CLI::NonNegativeNumber);
    sub->add_option("--window", opt.window, "exponent window W for the oracle")->check(CLI::NonNegativeNumber);
    sub->add_flag("--trace", opt.trace, "print oracle stages");
  };

  auto* classify = app.add_subcommand("classify", "tag, m, c and delta of each cover");
  auto* propagate = app.add_subcommand("propagate", "level-two conductors and differents of a pair");
  auto* tower = app.add_subcommand("tower", "conductors through a three-cover tower");
  auto* genus = app.add_subcommand("genus", "genus above a germ");
  auto* torsor = app.add_subcommand("torsor-check", "is the fibre product a torsor");
  auto* verify = app.add_subcommand("verify", "oracle against the closed form");
  for (auto* s : {classify, propagate, tower, genus, torsor}) add_common(s, true);
  add_common(verify, false);
  verify->add_option("--grid", grid, "built-in grid: smoke, p3, p5, full")
      ->check(CLI::IsMember({"smoke", "p3", "p5", "full"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kInput;
  }

  try {
    if (verify->parsed()) {
      if (spec_path.empty()) return emit(cli::cmd_verify_grid(grid, opt), as_json);
      return emit(cli::cmd_verify_spec(cli::parse_spec_file(spec_path), opt), as_json);
    }
    const cli::SpecFile f = cli::parse_spec_file(spec_path);
    if (classify->parsed()) return emit(cli::cmd_classify(f, opt), as_json);
    if (propagate->parsed()) return emit(cli::cmd_propagate(f, opt), as_json);
    if (tower->parsed()) return emit(cli::cmd_tower(f, opt), as_json);
    if (genus->parsed()) return emit(cli::cmd_genus(f, opt), as_json);
    if (torsor->parsed()) return emit(cli::cmd_torsor_check(f, opt), as_json);
  } catch (const Error& e) {
    return emit_error(e, as_json);
  }
  return cli::kInput;
}
