#pragma once

// JSON and CSV forms of certificates, unitary tuples and bound reports.

#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <type_traits>

#include "gnorm/bounds.hpp"

namespace gnorm {

using Json = nlohmann::json;

namespace detail {

inline Rational json_rational(const Json& j) {
  if (!j.is_string()) throw Error("expected a rational string");
  return parse_rational(j.get<std::string>());
}

inline Json optional_index(const std::optional<std::size_t>& i) { return i ? Json(*i) : Json(nullptr); }

inline std::optional<std::size_t> json_optional_index(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::size_t>();
}

template <class E>
E enum_from(const std::string& s, std::initializer_list<E> values) {
  for (E v : values)
    if (s == to_string(v)) return v;
  throw Error("unknown value '" + s + "'");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Certificates

inline Json certificate_json(const UpperCertificate& c, const Presentation& p) {
  Json basis = Json::array(), blocks = Json::array(), gram = Json::array();
  for (const auto& w : c.basis) basis.push_back(format_word(w, p.alphabet()));
  for (const auto& w : c.block_words) blocks.push_back(format_word(w, p.alphabet()));
  for (const auto& g : c.gram) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < g.n; ++i) {
      Json row = Json::array();
      for (std::size_t j = 0; j < g.n; ++j) row.push_back(to_string(g(i, j)));
      rows.push_back(std::move(row));
    }
    gram.push_back(std::move(rows));
  }
  return {{"kind", "sos"},
          {"level", c.level},
          {"method", c.method},
          {"basis", basis},
          {"block_words", blocks},
          {"gram", gram},
          {"lambda", to_string(c.lambda)},
          {"residual", format_element(c.residual)},
          {"bound_squared", to_string(c.bound_squared)},
          {"bound", to_string(c.bound)}};
}

inline UpperCertificate certificate_from_json(const Json& j, const Presentation& p) {
  const auto free = Presentation::free_group(p.generator_names());
  UpperCertificate c{j.at("level").get<std::size_t>(), {}, {}, {}, detail::json_rational(j.at("lambda")),
                     parse_element(j.at("residual").get<std::string>(), free),
                     detail::json_rational(j.at("bound_squared")), detail::json_rational(j.at("bound")),
                     j.at("method").get<std::string>()};
  for (const auto& w : j.at("basis")) c.basis.push_back(parse_word(w.get<std::string>(), p));
  for (const auto& w : j.at("block_words")) c.block_words.push_back(parse_word(w.get<std::string>(), p));
  for (const auto& rows : j.at("gram")) {
    RationalMatrix g(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) throw Error("Gram block is not square");
      for (std::size_t k = 0; k < rows.size(); ++k) g(i, k) = detail::json_rational(rows[i][k]);
    }
    c.gram.push_back(std::move(g));
  }
  return c;
}

/// Matrices as rows of [re, im] pairs.
inline Json tuple_json(const UnitaryTuple& t) {
  Json matrices = Json::array();
  for (const auto& m : t.matrices) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      Json row = Json::array();
      for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back({m(i, k).real(), m(i, k).imag()});
      rows.push_back(std::move(row));
    }
    matrices.push_back(std::move(rows));
  }
  Json feas;
  if (const auto* e = std::get_if<ExactByConstruction>(&t.feasibility)) {
    feas = {{"kind", "exact"}, {"construction", e->construction}};
  } else {
    feas = {{"kind", "verified"}, {"residual", std::get<Verified>(t.feasibility).residual}};
  }
  return {{"kind", "tuple"}, {"dimension", t.dimension}, {"feasibility", feas}, {"matrices", matrices}};
}

inline UnitaryTuple tuple_from_json(const Json& j) {
  UnitaryTuple t;
  t.dimension = j.at("dimension").get<std::size_t>();
  const auto k = static_cast<Eigen::Index>(t.dimension);
  for (const auto& rows : j.at("matrices")) {
    if (rows.size() != t.dimension) throw Error("matrix has the wrong number of rows");
    ComplexMatrix m(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto& row = rows[static_cast<std::size_t>(i)];
      if (row.size() != t.dimension) throw Error("matrix has the wrong number of columns");
      for (Eigen::Index c = 0; c < k; ++c) {
        const auto& z = row[static_cast<std::size_t>(c)];
        m(i, c) = {z.at(0).get<double>(), z.at(1).get<double>()};
      }
    }
    t.matrices.push_back(std::move(m));
  }
  const auto& f = j.at("feasibility");
  if (f.at("kind") == "exact") t.feasibility = ExactByConstruction{f.at("construction").get<std::string>()};
  else t.feasibility = Verified{f.at("residual").get<double>()};
  return t;
}

inline Json quotient_json(const PermutationQuotient& q) {
  return {{"kind", "quotient"}, {"degree", q.degree}, {"images", q.images}};
}

inline PermutationQuotient quotient_from_json(const Json& j) {
  return {j.at("degree").get<std::size_t>(), j.at("images").get<std::vector<Permutation>>()};
}

inline Json certificate_body_json(const CertificateBody& b, const Presentation& p) {
  if (const auto* c = std::get_if<UpperCertificate>(&b)) return certificate_json(*c, p);
  if (const auto* t = std::get_if<UnitaryTuple>(&b)) return tuple_json(*t);
  return quotient_json(std::get<PermutationQuotient>(b));
}

inline CertificateBody certificate_body_from_json(const Json& j, const Presentation& p) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "sos") return certificate_from_json(j, p);
  if (kind == "tuple") return tuple_from_json(j);
  if (kind == "quotient") return quotient_from_json(j);
  throw Error("unknown certificate kind '" + kind + "'");
}

inline Json verdict_json(const Verdict& v, const Presentation& p) {
  Json out = {{"verdict", verdict_name(v)}};
  auto witness = [&](const auto& w) -> Json {
    using W = std::decay_t<decltype(w)>;
    if constexpr (std::is_same_v<W, Consequence>) {
      Json factors = Json::array();
      for (const auto& f : w.factors) {
        factors.push_back({{"conjugator", format_word(f.conjugator, p.alphabet())},
                           {"relator", format_word(p.relators().at(f.relator), p.alphabet())},
                           {"sign", f.sign}});
      }
      return {{"kind", "consequence"}, {"factors", factors}};
    } else if constexpr (std::is_same_v<W, PermutationQuotient>) {
      return quotient_json(w);
    } else {
      return {{"kind", "normal-form"}, {"word", format_word(w.normal_form, p.alphabet())}};
    }
  };
  if (const auto* t = std::get_if<Trivial>(&v)) {
    out["witness"] = std::visit(witness, t->witness);
  } else if (const auto* n = std::get_if<Nontrivial>(&v)) {
    out["witness"] = std::visit(witness, n->witness);
  } else {
    const auto& e = std::get<Exhausted>(v);
    out["exhausted"] = {{"consequence_steps", e.consequence_steps},
                        {"quotient_steps", e.quotient_steps},
                        {"largest_word_length", e.largest_word_length},
                        {"largest_degree", e.largest_degree}};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

inline Json config_json(const BoundsConfig& c) {
  return {{"target_gap", c.target_gap ? Json(*c.target_gap) : Json(nullptr)},
          {"budget_steps", c.budget_steps},
          {"levels", c.levels},
          {"moments", c.moments},
          {"compression_radius", c.compression_radius},
          {"rep_dim", c.rep_dim},
          {"trials", c.trials},
          {"quotient_degree", c.quotient_degree},
          {"amenable", c.amenable},
          {"max_rows", c.max_rows},
          {"support_cap", c.support_cap}};
}

inline BoundsConfig config_from_json(const Json& j, std::uint64_t seed) {
  BoundsConfig c;
  if (!j.at("target_gap").is_null()) c.target_gap = j.at("target_gap").get<double>();
  c.budget_steps = j.at("budget_steps").get<std::size_t>();
  c.levels = j.at("levels").get<std::size_t>();
  c.moments = j.at("moments").get<std::size_t>();
  c.compression_radius = j.at("compression_radius").get<std::size_t>();
  c.rep_dim = j.at("rep_dim").get<std::size_t>();
  c.trials = j.at("trials").get<std::size_t>();
  c.quotient_degree = j.at("quotient_degree").get<std::size_t>();
  c.amenable = j.at("amenable").get<bool>();
  c.max_rows = j.at("max_rows").get<std::size_t>();
  c.support_cap = j.at("support_cap").get<std::size_t>();
  c.seed = seed;
  return c;
}

inline bool nondecreasing(const std::vector<Rational>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[i - 1]) return false;
  return true;
}

inline bool nonincreasing(const std::vector<Rational>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1]) return false;
  return true;
}

/// Schema-stable JSON. Wall-clock fields are advisory and can be left out
/// to compare runs.
inline Json report_json(const BoundsReport& r, bool with_timing = true) {
  const Presentation& p = *r.presentation;
  Json lower = Json::array(), upper = Json::array(), certs = Json::array();
  for (const auto& e : r.lower) {
    Json j = {{"value", to_string(e.value)},    {"approx", e.value.get_d()}, {"source", to_string(e.source)},
              {"certified", e.certified},       {"round", e.round},          {"detail", e.detail},
              {"certificate", detail::optional_index(e.certificate)}};
    if (with_timing) j["wall_seconds"] = e.wall_seconds;
    lower.push_back(std::move(j));
  }
  for (const auto& e : r.upper) {
    Json j = {{"value", to_string(e.value)}, {"approx", e.value.get_d()}, {"level", e.level},
              {"certified", e.certified},    {"round", e.round},          {"detail", e.detail},
              {"certificate", detail::optional_index(e.certificate)}};
    if (with_timing) j["wall_seconds"] = e.wall_seconds;
    upper.push_back(std::move(j));
  }
  for (const auto& c : r.certificates) certs.push_back(certificate_body_json(c, p));
  Json running_lower = Json::array(), running_upper = Json::array();
  const auto rl = r.running_lower(), ru = r.running_upper();
  for (const auto& q : rl) running_lower.push_back(to_string(q));
  for (const auto& q : ru) running_upper.push_back(to_string(q));
  const auto gap = r.gap();
  Json out = {{"presentation", format_presentation(p)},
              {"element", format_element(r.element)},
              {"working_element", format_element(r.working)},
              {"norm_kind", to_string(r.norm_kind)},
              {"lower", lower},
              {"upper", upper},
              {"gap", gap ? Json(to_string(*gap)) : Json(nullptr)},
              {"gap_approx", gap ? Json(gap->get_d()) : Json(nullptr)},
              {"running", {{"lower", running_lower}, {"upper", running_upper}}},
              {"monotone", {{"lower", nondecreasing(rl)}, {"upper", nonincreasing(ru)}}},
              {"sandwich", r.sandwich_holds()},
              {"certificates", certs},
              {"config", config_json(r.config)},
              {"seed", r.config.seed},
              {"steps", r.steps},
              {"notes", r.notes},
              {"rounds", r.rounds},
              {"target_reached", r.target_reached},
              {"budget_exhausted", r.budget_exhausted}};
  if (with_timing) out["wall_seconds"] = r.wall_seconds;
  return out;
}

inline BoundsReport report_from_json(const Json& j) {
  const auto p = parse_presentation(j.at("presentation").get<std::string>());
  BoundsReport r(parse_element(j.at("element").get<std::string>(), p));
  r.working = parse_element(j.at("working_element").get<std::string>(), p);
  r.norm_kind = detail::enum_from(j.at("norm_kind").get<std::string>(),
                                  {NormKind::Universal, NormKind::ReducedViaAmenable});
  for (const auto& e : j.at("lower")) {
    r.lower.push_back({detail::json_rational(e.at("value")),
                       detail::enum_from(e.at("source").get<std::string>(),
                                         {LowerSource::Moment, LowerSource::Compression, LowerSource::Representation,
                                          LowerSource::Quotient}),
                       e.at("certified").get<bool>(), e.at("round").get<std::size_t>(),
                       e.at("detail").get<std::string>(), detail::json_optional_index(e.at("certificate")),
                       e.value("wall_seconds", 0.0)});
  }
  for (const auto& e : j.at("upper")) {
    r.upper.push_back({detail::json_rational(e.at("value")), e.at("level").get<std::size_t>(),
                       e.at("certified").get<bool>(), e.at("round").get<std::size_t>(),
                       e.at("detail").get<std::string>(), detail::json_optional_index(e.at("certificate")),
                       e.value("wall_seconds", 0.0)});
  }
  for (const auto& c : j.at("certificates")) r.certificates.push_back(certificate_body_from_json(c, *p));
  r.config = config_from_json(j.at("config"), j.at("seed").get<std::uint64_t>());
  r.steps = j.at("steps").get<std::map<std::string, std::size_t>>();
  r.notes = j.at("notes").get<std::vector<std::string>>();
  r.rounds = j.at("rounds").get<std::size_t>();
  r.target_reached = j.at("target_reached").get<bool>();
  r.budget_exhausted = j.at("budget_exhausted").get<bool>();
  r.wall_seconds = j.value("wall_seconds", 0.0);
  return r;
}

/// True when the stored monotonicity flags agree with the recomputed ones.
inline bool monotone_flags_consistent(const Json& j) {
  const BoundsReport r = report_from_json(j);
  return j.at("monotone").at("lower").get<bool>() == nondecreasing(r.running_lower()) &&
         j.at("monotone").at("upper").get<bool>() == nonincreasing(r.running_upper());
}

inline Json invertibility_json(const InvertibilityVerdict& v, bool with_timing = true) {
  return {{"verdict", to_string(v.kind)},
          {"lambda", to_string(v.lambda)},
          {"shifted", format_element(v.shifted)},
          {"upper", v.upper ? Json(to_string(*v.upper)) : Json(nullptr)},
          {"lower", to_string(v.lower)},
          {"tolerance", v.tolerance},
          {"certificate", v.certificate ? certificate_json(*v.certificate, *v.report.presentation) : Json(nullptr)},
          {"report", report_json(v.report, with_timing)}};
}

inline Json spectrum_json(const SpectrumEnclosure& s, bool with_timing = true) {
  auto enclosure = [](const Enclosure& e) -> Json {
    return {{"low", to_string(e.low)}, {"high", to_string(e.high)}, {"low_approx", e.low.get_d()},
            {"high_approx", e.high.get_d()}};
  };
  return {{"shift", to_string(s.shift)},
          {"bottom", enclosure(s.bottom)},
          {"top", enclosure(s.top)},
          {"plus", report_json(s.plus, with_timing)},
          {"minus", report_json(s.minus, with_timing)}};
}

/// (index, p_n, q_n) per round, p_n and q_n the running extremes.
inline std::string report_csv(const BoundsReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "index,p_n,q_n\n";
  for (std::size_t round = 0; round <= r.rounds; ++round) {
    Rational p = 0;
    std::optional<Rational> q;
    for (const auto& e : r.lower)
      if (e.certified && e.round <= round && e.value > p) p = e.value;
    for (const auto& e : r.upper)
      if (e.certified && e.round <= round && (!q || e.value < *q)) q = e.value;
    out << round << ',' << p.get_d() << ',';
    if (q) out << q->get_d();
    out << '\n';
  }
  return out.str();
}

}  // namespace gnorm
