#include "hankelshift/cli.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hankelshift/hankel.hpp"
#include "hankelshift/measures.hpp"
#include "hankelshift/perturbation.hpp"
#include "hankelshift/shifts.hpp"

namespace hankelshift::cli {

using Json = nlohmann::ordered_json;

namespace {

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < std::min(offset, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

std::string at(std::size_t line, std::size_t col) {
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

std::vector<Number> read_numbers(const Json& doc, const char* key, bool& quoted, bool& seen) {
  if (!doc.contains(key)) throw InputError(std::string("missing \"") + key + "\"");
  const Json& arr = doc.at(key);
  if (!arr.is_array() || arr.empty()) throw InputError(std::string("\"") + key + "\" must be a nonempty array");
  std::vector<Number> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const Json& v = arr[i];
    Number n;
    if (v.is_string()) {
      n.text = v.get<std::string>();
      n.quoted = true;
    } else if (v.is_number()) {
      n.text = v.dump();
    } else {
      throw InputError(std::string("\"") + key + "\"[" + std::to_string(i) + "] is neither a number nor a \"p/q\" string");
    }
    if (seen && n.quoted != quoted) {
      throw InputError(std::string("mixed representations: \"") + key + "\"[" + std::to_string(i) +
                       "] differs from earlier values (use all \"p/q\" strings or all numbers)");
    }
    quoted = n.quoted;
    seen = true;
    out.push_back(std::move(n));
  }
  return out;
}

// Exact value of a decimal literal such as "-1.25e-3".
Rational parse_decimal(std::string_view text) {
  std::string_view s = text;
  bool neg = false;
  if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
    neg = s[0] == '-';
    s.remove_prefix(1);
  }
  std::string digits;
  long exp10 = 0;
  std::size_t i = 0;
  bool any = false;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) digits.push_back(s[i++]), any = true;
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) digits.push_back(s[i++]), --exp10, any = true;
  }
  if (!any) throw InputError("invalid number \"" + std::string(text) + "\"");
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    long e = 0;
    const char* first = s.data() + i;
    if (i < s.size() && s[i] == '+') ++first;
    auto res = std::from_chars(first, s.data() + s.size(), e);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw InputError("invalid number \"" + std::string(text) + "\"");
    exp10 += e;
    i = s.size();
  }
  if (i != s.size()) throw InputError("invalid number \"" + std::string(text) + "\"");
  mpz_class mant(digits, 10);
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exp10)));
  Rational r = exp10 >= 0 ? Rational(mant * scale) : Rational(mant, scale);
  r.canonicalize();
  return neg ? Rational(-r) : r;
}

template <typename T>
T to_scalar(const Number& n) {
  if constexpr (is_exact_v<T>) {
    return n.quoted ? parse_rational(n.text) : parse_decimal(n.text);
  } else {
    if (n.quoted) return parse_rational(n.text).get_d();
    double x = 0.0;
    auto res = std::from_chars(n.text.data(), n.text.data() + n.text.size(), x);
    if (res.ec != std::errc() || res.ptr != n.text.data() + n.text.size())
      throw InputError("invalid number \"" + n.text + "\"");
    return x;
  }
}

template <typename T>
std::vector<T> to_scalars(const std::vector<Number>& v) {
  std::vector<T> out;
  out.reserve(v.size());
  for (const auto& n : v) out.push_back(to_scalar<T>(n));
  return out;
}

}  // namespace

SequenceFile parse_sequence_text(std::string_view text, bool csv) {
  SequenceFile file;
  if (csv) {
    file.kind = Kind::moments;
    std::size_t line = 1;
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      std::string_view row = text.substr(start, end - start);
      std::size_t col = 0;
      while (col < row.size()) {
        while (col < row.size() && (std::isspace(static_cast<unsigned char>(row[col])) || row[col] == ',')) ++col;
        if (col >= row.size() || row[col] == '#') break;
        std::size_t stop = col;
        while (stop < row.size() && row[stop] != ',' && !std::isspace(static_cast<unsigned char>(row[stop]))) ++stop;
        const std::string token(row.substr(col, stop - col));
        double x = 0.0;
        auto res = std::from_chars(token.data(), token.data() + token.size(), x);
        if (res.ec != std::errc() || res.ptr != token.data() + token.size())
          throw InputError("CSV parse error at " + at(line, col + 1) + ": \"" + token + "\" is not a number");
        file.values.push_back({token, false});
        col = stop;
      }
      ++line;
      start = end + 1;
    }
    if (file.values.empty()) throw InputError("CSV file holds no values");
    return file;
  }

  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    std::string msg = e.what();
    if (const auto pos = msg.find("syntax error"); pos != std::string::npos) msg = msg.substr(pos);
    throw InputError("JSON parse error at " + at(line, col) + ": " + msg);
  }
  if (!doc.is_object()) throw InputError("sequence file must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    static const std::vector<std::string> known{"kind", "values", "atoms", "densities", "exact", "squared", "horizon"};
    if (std::find(known.begin(), known.end(), key) == known.end()) throw InputError("unknown field \"" + key + "\"");
  }
  if (!doc.contains("kind") || !doc["kind"].is_string()) throw InputError("missing string field \"kind\"");
  const std::string kind = doc["kind"].get<std::string>();
  bool seen = false;
  if (kind == "weights" || kind == "moments") {
    file.kind = kind == "weights" ? Kind::weights : Kind::moments;
    file.values = read_numbers(doc, "values", file.quoted, seen);
  } else if (kind == "measure") {
    file.kind = Kind::measure;
    file.atoms = read_numbers(doc, "atoms", file.quoted, seen);
    file.densities = read_numbers(doc, "densities", file.quoted, seen);
    if (doc.contains("horizon")) {
      if (!doc["horizon"].is_number_unsigned()) throw InputError("\"horizon\" must be a nonnegative integer");
      file.horizon = doc["horizon"].get<std::size_t>();
    }
  } else {
    throw InputError("\"kind\" must be \"weights\", \"moments\" or \"measure\", got \"" + kind + "\"");
  }
  if (doc.contains("exact")) {
    if (!doc["exact"].is_boolean()) throw InputError("\"exact\" must be a boolean");
    file.exact = doc["exact"].get<bool>();
  }
  if (doc.contains("squared")) {
    if (!doc["squared"].is_boolean()) throw InputError("\"squared\" must be a boolean");
    if (file.kind != Kind::weights) throw InputError("\"squared\" applies to weights only");
    file.squared = doc["squared"].get<bool>();
  }
  if (file.kind != Kind::measure && doc.contains("horizon")) throw InputError("\"horizon\" applies to measures only");
  return file;
}

SequenceFile load_sequence_file(const std::string& path, std::string* raw) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open \"" + path + "\"");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (raw) *raw = text;
  const bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
  return parse_sequence_text(text, csv);
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

struct Options {
  std::string command;
  std::string file;
  std::optional<std::size_t> k;
  std::optional<std::size_t> l;
  std::optional<std::size_t> max_order;
  bool exact = false;
  bool fl = false;
  std::optional<double> tol_zero;
  std::optional<double> tol_rel;
  std::optional<double> bisect_eps;
  bool json = false;
  bool no_timestamp = false;
  bool closed_form = false;
};

template <typename T>
Json num(const T& x) {
  if constexpr (is_exact_v<T>) {
    return to_string(x);
  } else {
    return x;
  }
}

template <typename T>
Json endpoint_json(const Endpoint<T>& e) {
  Json j;
  if (e.pinned) {
    j["value"] = num(e.lo);
  } else {
    j["lo"] = num(e.lo);
    j["hi"] = num(e.hi);
    j["approx"] = e.approx();
  }
  j["method"] = std::string(to_string(e.method));
  return j;
}

std::string endpoint_text(const Json& e) {
  if (e.contains("value")) return e["value"].is_string() ? e["value"].get<std::string>() : e["value"].dump();
  std::ostringstream os;
  os << std::setprecision(15) << e["approx"].get<double>();
  return "~" + os.str();
}

Json block_json(const BlockIndex& b) { return Json{{"n", b.n}, {"k", b.k}}; }

template <typename T>
Json interval_json(const IntervalReport<T>& r) {
  Json j;
  j["k"] = r.k;
  j["l"] = r.l;
  j["lower"] = endpoint_json(r.lower);
  j["upper"] = endpoint_json(r.upper);
  j["lower_block"] = r.lower_block;
  j["upper_block"] = r.upper_block;
  j["contains_one"] = r.contains_one;
  j["one_interior"] = r.one_interior;
  j["marginal"] = r.marginal;
  Json blocks = Json::array();
  for (const auto& b : r.per_block) {
    Json row;
    row["n"] = b.n;
    row["lower"] = endpoint_text(endpoint_json(b.lower));
    row["lower_method"] = std::string(to_string(b.lower.method));
    row["upper"] = b.upper ? endpoint_text(endpoint_json(*b.upper)) : std::string("unbounded");
    row["upper_method"] = b.upper ? std::string(to_string(b.upper->method)) : std::string("closed_form");
    row["t_independent"] = b.t_independent;
    row["degenerate"] = b.degenerate;
    row["at_cap"] = b.at_cap;
    blocks.push_back(row);
  }
  j["per_block"] = blocks;
  j["notes"] = r.notes;
  return j;
}

template <typename T>
Json propagation_json(const PropagationReport<T>& p) {
  Json j;
  j["k"] = p.k;
  j["order"] = p.order;
  j["vanishing_found"] = p.vanishing_found;
  j["first_zero"] = p.first_zero ? Json(*p.first_zero) : Json(nullptr);
  j["conclusion_verified"] = p.conclusion_verified;
  j["anchor_zero_exempt"] = p.anchor_zero_nonzero;
  j["horizon_edge_only"] = p.horizon_edge_only;
  j["nonvanishing"] = p.nonvanishing;
  j["marginal"] = p.marginal;
  j["notes"] = p.notes;
  return j;
}

template <typename T>
struct Input {
  std::optional<MomentSequence<T>> gamma;
  std::optional<WeightSequence<T>> alpha;
  std::optional<AtomicMeasure<T>> mu;
};

template <typename T>
Input<T> build_input(const SequenceFile& file) {
  Input<T> in;
  switch (file.kind) {
    case Kind::weights: {
      auto v = to_scalars<T>(file.values);
      in.alpha = file.squared ? WeightSequence<T>::from_squared(std::move(v)) : WeightSequence<T>::from_weights(v);
      in.gamma = weights_to_moments(*in.alpha);
      break;
    }
    case Kind::moments:
      in.gamma = MomentSequence<T>(to_scalars<T>(file.values));
      break;
    case Kind::measure:
      in.mu = AtomicMeasure<T>(to_scalars<T>(file.atoms), to_scalars<T>(file.densities));
      in.gamma = moments_of(*in.mu, file.horizon);
      break;
  }
  return in;
}

struct Outcome {
  Json body;
  int exit_code = 0;
  std::vector<std::string> warnings;
};

template <typename T>
Outcome cmd_analyze(const Options& opt, const Input<T>& in, const ToleranceContext& ctx) {
  const auto& gamma = *in.gamma;
  const std::size_t N = gamma.horizon();
  if (opt.k && 2 * *opt.k > N) throw HorizonError(2 * *opt.k, N);
  const std::size_t K = opt.k.value_or(std::min<std::size_t>(3, N / 2));
  Outcome o;
  Json& j = o.body;
  const bool shift = in.alpha.has_value();
  if (shift) j["hyponormal"] = is_hyponormal(*in.alpha, ctx);

  Json ladder = Json::array();
  std::size_t holds_through = 0;
  bool prefix = true;
  for (std::size_t k = 1; k <= K; ++k) {
    const auto v = is_k_positive(gamma, k, ctx);
    Json row;
    row["k"] = k;
    row["holds"] = v.holds;
    row["first_failure"] = v.first_failure ? Json(block_json(*v.first_failure)) : Json(nullptr);
    row["marginal_blocks"] = v.marginal.size();
    ladder.push_back(row);
    if (!v.marginal.empty())
      o.warnings.push_back("k=" + std::to_string(k) + ": " + std::to_string(v.marginal.size()) +
                           " block(s) decided within the tolerance band");
    prefix = prefix && v.holds;
    if (prefix) holds_through = k;
  }
  j[shift ? "k_hyponormal" : "k_positive"] = ladder;
  j["log_convex"] = log_convexity(gamma, ctx);
  j["zero_moment_collapse_consistent"] = zero_moment_collapse(gamma, ctx);

  if (shift) {
    if (holds_through >= 2) {
      const auto f = flatness_check(*in.alpha, holds_through, ctx);
      Json fl;
      fl["k"] = holds_through;
      fl["flat_pair_found"] = f.flat_pair_found;
      fl["first_pair"] = f.first_pair ? Json(*f.first_pair) : Json(nullptr);
      fl["propagation_verified"] = f.propagation_verified;
      fl["alpha0_exception"] = f.alpha0_exception;
      fl["horizon_edge_only"] = f.horizon_edge_only;
      fl["mismatches"] = f.mismatches;
      fl["notes"] = f.notes;
      j["flatness"] = fl;
    } else {
      j["flatness"] = Json{{"skipped", "needs 2-hyponormality on the horizon"}};
    }
  }

  Json prop = Json::array();
  for (std::size_t k = 1; k <= holds_through; ++k) prop.push_back(propagation_json(propagation_report(gamma, k, ctx)));
  j["propagation"] = prop;
  o.warnings.push_back("verdicts cover the horizon N=" + std::to_string(N) + " only");
  return o;
}

template <typename T>
Outcome cmd_dets(const Options& opt, const Input<T>& in, const ToleranceContext& ctx) {
  const auto& gamma = *in.gamma;
  const std::size_t N = gamma.horizon();
  if (opt.k && 2 * *opt.k > N) throw HorizonError(2 * *opt.k, N);
  const std::size_t K = opt.k.value_or(std::min<std::size_t>(2, N / 2));
  Outcome o;
  const auto table = det_sequence(gamma, K, ctx);
  Json rows = Json::array();
  for (std::size_t n = 0; n < table.dets.size(); ++n) {
    Json row;
    row["n"] = n;
    row["det"] = num(table.dets[n]);
    row["method"] = std::string(to_string(table.method[n]));
    row["vanishes"] = det_vanishes(table.dets[n], block(gamma, n, K), ctx);
    rows.push_back(row);
  }
  o.body["k"] = K;
  o.body["dets"] = rows;
  if (2 * (K + 1) <= N) {
    try {
      o.body["propagation"] = propagation_json(propagation_report(gamma, K + 1, ctx));
    } catch (const PreconditionError& e) {
      o.body["propagation"] = Json{{"skipped", e.what()}};
    }
  } else {
    o.body["propagation"] = Json{{"skipped", "horizon too short for order " + std::to_string(K + 1) + " positivity"}};
  }
  return o;
}

template <typename T>
Outcome cmd_recursion(const Options& opt, const Input<T>& in, const ToleranceContext& ctx) {
  const auto& gamma = *in.gamma;
  const std::size_t N = gamma.horizon();
  const std::size_t R = opt.max_order.value_or(std::min<std::size_t>(5, N / 2));
  Outcome o;
  const auto rec = detect_recursion(gamma, R, ctx);
  Json r;
  r["max_order"] = R;
  std::optional<AtomicMeasure<T>> recovered;
  if (rec) {
    r["found"] = true;
    r["order"] = rec->order;
    Json coeffs = Json::array();
    for (const auto& a : rec->coeffs) coeffs.push_back(num(a));
    r["coeffs"] = coeffs;
    r["method"] = "direct";
    r["valid_from"] = rec->valid_from;
    if constexpr (!is_exact_v<T>) {
      r["residual"] = rec->residual;
      r["marginal"] = rec->marginal;
      if (rec->marginal) o.warnings.push_back("recursion residual is within the tolerance band");
    }
    try {
      const auto rc = recover_atoms(*rec, gamma, ctx);
      Json atoms = Json::array();
      for (std::size_t j = 0; j < rc.atoms.size(); ++j) {
        const auto& a = rc.atoms[j];
        Json row;
        if (a.pinned) {
          row["atom"] = num(a.lo);
          row["atom_method"] = "direct";
        } else {
          row["atom"] = a.approx();
          row["enclosure"] = Json::array({num(a.lo), num(a.hi)});
          row["atom_method"] = "bisection";
        }
        if (rc.measure) row["density"] = num(rc.measure->densities()[j]);
        else row["density"] = rc.approx_densities[j];
        row["density_method"] = "direct";
        atoms.push_back(row);
      }
      r["measure"] = atoms;
      r["verified"] = true;
      r["notes"] = rc.notes;
      recovered = rc.measure;
    } catch (const PreconditionError& e) {
      r["measure"] = Json{{"rejected", e.what()}};
      o.exit_code = 3;
    }
  } else {
    r["found"] = false;
  }
  o.body["recursion"] = r;

  bool finite = false;
  try {
    const auto fm = is_finite_mass(gamma, ctx);
    finite = fm.finite;
    Json f;
    f["finite"] = fm.finite;
    f["witness"] = fm.witness ? Json{{"p", fm.witness->n}, {"k", fm.witness->k}} : Json(nullptr);
    f["marginal"] = fm.marginal;
    f["notes"] = fm.notes;
    o.body["finite_mass"] = f;
  } catch (const PreconditionError& e) {
    o.body["finite_mass"] = Json{{"rejected", e.what()}};
    o.exit_code = 3;
  }
  if (in.alpha && recovered) o.body["berger"] = verify_berger(*in.alpha, *recovered, ctx);

  if (!rec && !finite) {
    o.body["summary"] = "no recursion <= " + std::to_string(R) + " on horizon; not finite-mass on horizon";
  } else if (rec) {
    o.body["summary"] = "recursively generated of order " + std::to_string(rec->order) +
                        " on the horizon; subnormality is not certified by finite data";
  } else {
    o.body["summary"] = "vanishing block determinant on the horizon but no recursion <= " + std::to_string(R);
  }
  return o;
}

template <typename T>
double endpoint_gap(const Endpoint<T>& a, const Endpoint<T>& b) {
  return std::fabs(a.approx() - b.approx());
}

template <typename T>
Outcome cmd_perturb(const Options& opt, const Input<T>& in, const ToleranceContext& ctx, const PerturbationOptions& popts) {
  const auto& gamma = *in.gamma;
  const std::size_t l = opt.l.value_or(1);
  const std::size_t k = opt.k.value_or(1);
  Outcome o;
  o.body["l"] = l;
  o.body["k"] = k;

  const auto i1 = interval_I1(gamma, l);
  o.body["I1"] = Json{{"lower", Json{{"value", num(i1.lo())}, {"method", "closed_form"}}},
                      {"upper", Json{{"value", num(i1.hi())}, {"method", "closed_form"}}}};

  std::optional<IntervalReport<T>> primary;
  bool lower_zero = false;
  if (k == 1) {
    lower_zero = i1.lo() == T(0);
    o.body["primary"] = Json{{"k", 1},
                             {"lower", o.body["I1"]["lower"]},
                             {"upper", o.body["I1"]["upper"]},
                             {"contains_one", i1.contains(T(1))},
                             {"one_interior", i1.lo() < T(1) && T(1) < i1.hi()}};
  } else if (k == 2) {
    primary = interval_I2(gamma, l, ctx, popts);
    o.body["primary"] = interval_json(*primary);
    if (const auto d = discriminant_diagnostic(gamma, l)) {
      o.body["discriminant_diagnostic"] = Json{{"left", num(d->left)}, {"right", num(d->right)}, {"holds", d->holds}};
    }
  } else {
    primary = interval_Ik(gamma, l, k, ctx, popts);
    o.body["primary"] = interval_json(*primary);
  }
  if (primary) lower_zero = primary->lower.pinned && primary->lower.lo == T(0);

  if (k <= 2 && !opt.closed_form) {
    const auto check = interval_Ik(gamma, l, k, ctx, popts);
    double gap = 0.0;
    if (k == 1) {
      gap = std::max(std::fabs(to_double(i1.lo()) - check.lower.approx()),
                     std::fabs(to_double(i1.hi()) - check.upper.approx()));
    } else {
      gap = std::max(endpoint_gap(primary->lower, check.lower), endpoint_gap(primary->upper, check.upper));
    }
    // float bisection moves endpoints by the PSD tolerance, far above 1e-9
    const double allowed = is_exact_v<T> ? 1e-9 : popts.interior_margin;
    const bool agree = gap <= allowed;
    o.body["cross_check"] = Json{{"method", "bisection"},
                                 {"lower", endpoint_json(check.lower)},
                                 {"upper", endpoint_json(check.upper)},
                                 {"max_endpoint_gap", gap},
                                 {"allowed_gap", allowed},
                                 {"agree", agree}};
    if (!agree) {
      o.warnings.push_back("closed form and bisection disagree beyond " + to_string(allowed));
      o.exit_code = 4;
    }
  }

  const auto iv = is_interior(gamma, l, k, ctx, popts);
  o.body["interior"] = Json{{"interior", iv.interior},
                            {"pd_all", iv.pd_all},
                            {"failing_block", iv.failing_block ? Json(*iv.failing_block) : Json(nullptr)},
                            {"agree", iv.agree},
                            {"marginal", iv.marginal},
                            {"notes", iv.notes}};
  if (!iv.agree) {
    o.warnings.push_back("interiority incident: positive definiteness and the interval disagree");
    o.exit_code = 4;
  }
  if (in.alpha && lower_zero) {
    o.warnings.push_back("t = 0 is admissible, but sqrt(t) alpha_l = 0 would make the shift non-injective");
  }
  return o;
}

std::string timestamp_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string cell(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "yes" : "no";
  if (v.is_null()) return "-";
  if (v.is_number_float()) {
    std::ostringstream os;
    os << std::setprecision(15) << v.get<double>();
    return os.str();
  }
  if (v.is_object() && v.contains("n") && v.contains("k") && v.size() == 2)
    return "n=" + v["n"].dump() + ",k=" + v["k"].dump();
  if (v.is_array() && std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_primitive(); })) {
    std::string s;
    for (const auto& e : v) s += (s.empty() ? "" : ", ") + cell(e);
    return s.empty() ? "-" : s;
  }
  return v.dump();
}

bool is_table(const Json& arr) {
  if (arr.empty()) return false;
  for (const auto& row : arr) {
    if (!row.is_object()) return false;
    for (const auto& [_, v] : row.items())
      if (v.is_array() && !v.empty() && !std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_primitive(); }))
        return false;
  }
  return true;
}

void render(const Json& obj, std::ostream& out, int indent);

void render_table(const Json& arr, std::ostream& out, int indent) {
  std::vector<std::string> cols;
  for (const auto& row : arr)
    for (const auto& [key, _] : row.items())
      if (std::find(cols.begin(), cols.end(), key) == cols.end()) cols.push_back(key);
  std::vector<std::size_t> width(cols.size());
  std::vector<std::vector<std::string>> cells;
  for (std::size_t c = 0; c < cols.size(); ++c) width[c] = cols[c].size();
  for (const auto& row : arr) {
    std::vector<std::string> line;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      line.push_back(row.contains(cols[c]) ? cell(row[cols[c]]) : "");
      width[c] = std::max(width[c], line.back().size());
    }
    cells.push_back(std::move(line));
  }
  const std::string pad(indent, ' ');
  auto emit = [&](const std::vector<std::string>& line) {
    out << pad;
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c + 1 < line.size()) out << std::left << std::setw(static_cast<int>(width[c])) << line[c] << "  ";
      else out << line[c];
    }
    out << "\n";
  };
  emit(cols);
  for (const auto& line : cells) emit(line);
}

void render(const Json& obj, std::ostream& out, int indent) {
  const std::string pad(indent, ' ');
  for (const auto& [key, v] : obj.items()) {
    if (v.is_object()) {
      out << pad << key << ":\n";
      render(v, out, indent + 2);
    } else if (v.is_array() && is_table(v)) {
      out << pad << key << ":\n";
      render_table(v, out, indent + 2);
    } else if (v.is_array() && !v.empty() && std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_string(); }) &&
               (key == "notes" || key == "warnings")) {
      out << pad << key << ":\n";
      for (const auto& e : v) out << pad << "  - " << e.get<std::string>() << "\n";
    } else {
      out << pad << key << ": " << cell(v) << "\n";
    }
  }
}

template <typename T>
Outcome dispatch(const Options& opt, const SequenceFile& file, const ToleranceContext& ctx,
                 const PerturbationOptions& popts, Json& input_json) {
  const auto in = build_input<T>(file);
  input_json["horizon"] = in.gamma->horizon();
  Json moments = Json::array();
  for (const auto& g : in.gamma->values()) moments.push_back(num(g));
  input_json["moments"] = moments;
  if (opt.command == "analyze") return cmd_analyze(opt, in, ctx);
  if (opt.command == "dets") return cmd_dets(opt, in, ctx);
  if (opt.command == "recursion") return cmd_recursion(opt, in, ctx);
  return cmd_perturb(opt, in, ctx, popts);
}

std::string kind_name(Kind k) {
  switch (k) {
    case Kind::weights: return "weights";
    case Kind::moments: return "moments";
    case Kind::measure: return "measure";
  }
  return "?";
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InputError*>(&e)) return 2;
  if (dynamic_cast<const PreconditionError*>(&e)) return 3;
  return 4;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"Hankel positivity, weighted shifts and rank-one perturbation intervals", "hankelshift"};
  app.add_option("command", opt.command, "analyze | dets | recursion | perturb")
      ->required()
      ->check(CLI::IsMember({"analyze", "dets", "recursion", "perturb"}));
  app.add_option("file", opt.file, "JSON sequence file or CSV moment list")->required();
  app.add_option("--k", opt.k, "positivity order");
  app.add_option("--l", opt.l, "perturbed index (perturb)");
  app.add_option("--max-order", opt.max_order, "largest recursion order tried (recursion)");
  auto* ex = app.add_flag("--exact", opt.exact, "rational arithmetic");
  auto* fl = app.add_flag("--float", opt.fl, "double precision with tolerances");
  ex->excludes(fl);
  app.add_option("--tol-zero", opt.tol_zero, "absolute zero tolerance (float)");
  app.add_option("--tol-rel", opt.tol_rel, "relative zero tolerance (float); overrides HANKELSHIFT_TOL_REL");
  app.add_option("--bisect-eps", opt.bisect_eps, "relative bisection width for interval endpoints");
  app.add_flag("--json", opt.json, "emit one JSON object");
  app.add_flag("--no-timestamp", opt.no_timestamp, "omit the timestamp field");
  app.add_flag("--closed-form", opt.closed_form, "perturb: skip the bisection cross-check");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "usage: hankelshift <analyze|dets|recursion|perturb> <file> [options]\n";
    return 2;
  }

  try {
    ToleranceContext ctx;
    if (const char* env = std::getenv("HANKELSHIFT_TOL_REL")) {
      double v = 0.0;
      const std::string_view s(env);
      auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw InputError("HANKELSHIFT_TOL_REL is not a number: \"" + std::string(s) + "\"");
      ctx.rel_eps = v;
    }
    if (opt.tol_rel) ctx.rel_eps = *opt.tol_rel;
    if (opt.tol_zero) ctx.zero_eps = *opt.tol_zero;
    ctx.validate();
    PerturbationOptions popts;
    if (opt.bisect_eps) popts.bisect_eps = *opt.bisect_eps;
    popts.validate();

    std::string raw;
    const SequenceFile file = load_sequence_file(opt.file, &raw);
    bool exact = false;
    if (opt.exact) {
      exact = true;
    } else if (opt.fl) {
      exact = false;
    } else if (file.exact) {
      exact = *file.exact;
      if (!exact && file.quoted) throw InputError("\"p/q\" strings require exact mode; pass --float to convert them");
    } else {
      exact = file.quoted;
    }

    Json report;
    std::string echo = "hankelshift";
    for (const auto& a : args) echo += " " + a;
    report["command"] = echo;
    report["input_digest"] = [&] {
      std::ostringstream os;
      os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << fnv1a(raw);
      return os.str();
    }();
    if (!opt.no_timestamp) report["timestamp"] = timestamp_now();
    report["mode"] = exact ? "exact" : "float";
    report["tolerances"] = Json{{"zero_eps", ctx.zero_eps},
                                {"rel_eps", ctx.rel_eps},
                                {"psd_floor", ctx.psd_floor},
                                {"bisect_eps", popts.bisect_eps},
                                {"interior_margin", popts.interior_margin},
                                {"applies_to", exact ? "bisection width only" : "all float decisions"}};
    Json input;
    input["kind"] = kind_name(file.kind);
    if (file.kind == Kind::weights) input["squared"] = file.squared;
    Outcome outcome = exact ? dispatch<Rational>(opt, file, ctx, popts, input)
                            : dispatch<double>(opt, file, ctx, popts, input);
    report["input"] = input;
    report[opt.command] = outcome.body;
    report["warnings"] = outcome.warnings;

    if (opt.json) {
      out << report.dump(2) << "\n";
    } else {
      render(report, out, 0);
    }
    return outcome.exit_code;
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    err << "error: " << e.what() << "\n";
    return code;
  }
}

}  // namespace hankelshift::cli
