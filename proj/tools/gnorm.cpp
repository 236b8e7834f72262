// gnorm: certified bounds on group C*-norms from the command line.
//
// Exit codes: 0 success, 2 input error, 3 budget exhausted before the
// requested target (gap, or a word-problem verdict).

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gnorm/gnorm.hpp"

namespace {

constexpr int kInputError = 2;
constexpr int kBudgetExhausted = 3;

struct Common {
  std::string presentation_file;
  std::string element;
  std::string json_path;
  std::string csv_path;
  double tolerance = 1e-3;
  double target_gap = -1;
  gnorm::BoundsConfig cfg;
};

gnorm::PresentationPtr load_presentation(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gnorm::Error("cannot read presentation file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return gnorm::parse_presentation(buf.str());
}

void write_file(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw gnorm::Error("cannot write '" + path + "'");
  out << text;
}

std::string approx(const gnorm::Rational& q) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", q.get_d());
  return buf;
}

void add_bound_options(CLI::App* cmd, Common& c) {
  cmd->add_option("--presentation", c.presentation_file, "presentation file")->required();
  cmd->add_option("--element", c.element, "group ring element, e.g. '1 + x - 2*x*y^-1'")->required();
  cmd->add_flag("--amenable", c.cfg.amenable, "assert amenability: bounds then also enclose the reduced norm");
  cmd->add_option("--target-gap", c.target_gap, "stop once upper - lower is at most this");
  cmd->add_option("--levels", c.cfg.levels, "number of SOS levels")->capture_default_str();
  cmd->add_option("--moments", c.cfg.moments, "largest trace moment n")->capture_default_str();
  cmd->add_option("--radius", c.cfg.compression_radius, "largest compression radius")->capture_default_str();
  cmd->add_option("--rep-dim", c.cfg.rep_dim, "representation dimension (per block)")->capture_default_str();
  cmd->add_option("--trials", c.cfg.trials, "representation search trials")->capture_default_str();
  cmd->add_option("--seed", c.cfg.seed, "master seed")->capture_default_str();
  cmd->add_option("--quotient-degree", c.cfg.quotient_degree, "largest permutation degree")->capture_default_str();
  cmd->add_option("--max-rows", c.cfg.max_rows, "largest SOS program to solve")->capture_default_str();
  cmd->add_option("--budget-steps", c.cfg.budget_steps, "steps per engine")->capture_default_str();
  cmd->add_option("--json", c.json_path, "write the JSON report here");
}

void print_report(const gnorm::BoundsReport& r) {
  std::cout << "element:   " << gnorm::format_element(r.element) << "\n";
  if (!(r.working == r.element)) std::cout << "working:   " << gnorm::format_element(r.working) << "\n";
  std::cout << "norm:      " << gnorm::to_string(r.norm_kind) << "\n";
  for (const auto& e : r.lower) {
    std::cout << "  lower " << approx(e.value) << "  [" << gnorm::to_string(e.source) << ", round " << e.round
              << "] " << e.detail << "\n";
  }
  for (const auto& e : r.upper) {
    std::cout << "  upper " << approx(e.value) << "  [level " << e.level << ", round " << e.round << "] " << e.detail
              << "\n";
  }
  std::cout << "lower:     " << approx(r.best_lower()) << "\n";
  if (const auto u = r.best_upper()) std::cout << "upper:     " << approx(*u) << "\n";
  if (const auto g = r.gap()) std::cout << "gap:       " << approx(*g) << "\n";
  for (const auto& n : r.notes) std::cout << "note: " << n << "\n";
}

void finish_config(Common& c) {
  if (c.target_gap >= 0) c.cfg.target_gap = c.target_gap;
  c.cfg.validate();
}

int run_bounds(Common& c) {
  finish_config(c);
  const auto p = load_presentation(c.presentation_file);
  const auto a = gnorm::parse_element(c.element, p);
  const auto report = gnorm::run_norm_bounds(a, c.cfg);
  print_report(report);
  write_file(c.json_path, gnorm::report_json(report).dump(2) + "\n");
  write_file(c.csv_path, gnorm::report_csv(report));
  return c.cfg.target_gap && !report.target_reached ? kBudgetExhausted : 0;
}

int run_invertible(Common& c) {
  finish_config(c);
  const auto p = load_presentation(c.presentation_file);
  const auto a = gnorm::parse_element(c.element, p);
  const auto v = gnorm::decide_invertibility(a, c.cfg, c.tolerance);
  std::cout << "verdict:   " << gnorm::to_string(v.kind) << "\n"
            << "lambda:    " << gnorm::to_string(v.lambda) << "\n"
            << "shifted:   " << gnorm::format_element(v.shifted) << "\n";
  if (v.upper) std::cout << "upper:     " << approx(*v.upper) << "\n";
  std::cout << "lower:     " << approx(v.lower) << "\n";
  write_file(c.json_path, gnorm::invertibility_json(v).dump(2) + "\n");
  return 0;
}

int run_spectrum(Common& c) {
  finish_config(c);
  const auto p = load_presentation(c.presentation_file);
  const auto a = gnorm::parse_element(c.element, p);
  const auto s = gnorm::spectrum_interval(a, c.cfg);
  std::cout << "min of spectrum in [" << approx(s.bottom.low) << ", " << approx(s.bottom.high) << "]\n"
            << "max of spectrum in [" << approx(s.top.low) << ", " << approx(s.top.high) << "]\n";
  write_file(c.json_path, gnorm::spectrum_json(s).dump(2) + "\n");
  const bool reached = s.plus.target_reached && s.minus.target_reached;
  return c.cfg.target_gap && !reached ? kBudgetExhausted : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified bounds on universal and reduced group C*-norms"};
  app.require_subcommand(1);

  Common bounds, invertible, spectrum;
  auto* b = app.add_subcommand("bounds", "upper and lower bounds on the norm of an element");
  add_bound_options(b, bounds);
  b->add_option("--csv", bounds.csv_path, "write (index, p_n, q_n) here");

  std::string word_file, word_text, word_json;
  gnorm::WordBudget budget;
  auto* w = app.add_subcommand("word", "decide whether a word is trivial");
  w->add_option("--presentation", word_file, "presentation file")->required();
  w->add_option("--word", word_text, "word, e.g. 'x*y*x^-1*y^-1'")->required();
  w->add_option("--budget-steps", budget.consequence_steps, "steps for each search")->capture_default_str();
  w->add_option("--max-degree", budget.max_degree, "largest permutation degree")->capture_default_str();
  w->add_option("--json", word_json, "write the verdict here");

  auto* inv = app.add_subcommand("invertible", "decide invertibility of an element");
  add_bound_options(inv, invertible);
  inv->add_option("--tolerance", invertible.tolerance, "slack for the non-invertible verdict")->capture_default_str();

  auto* sp = app.add_subcommand("spectrum", "enclose the spectrum of a self-adjoint element");
  add_bound_options(sp, spectrum);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (b->parsed()) return run_bounds(bounds);
    if (inv->parsed()) return run_invertible(invertible);
    if (sp->parsed()) return run_spectrum(spectrum);
    budget.quotient_steps = budget.consequence_steps;
    const auto p = load_presentation(word_file);
    const auto word = gnorm::parse_word(word_text, *p);
    const auto v = gnorm::decide_word(word, *p, budget);
    const gnorm::Json j = gnorm::verdict_json(v, *p);
    std::cout << j.dump(2) << "\n";
    write_file(word_json, j.dump(2) + "\n");
    return std::holds_alternative<gnorm::Exhausted>(v) ? kBudgetExhausted : 0;
  } catch (const gnorm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
}
