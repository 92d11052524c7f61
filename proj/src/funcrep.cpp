#include "saltus/funcrep.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "saltus/errors.hpp"
#include "saltus/quadrature.hpp"

namespace saltus {

using nlohmann::json;

namespace {

[[noreturn]] void invariant(const std::string& pointer, const std::string& what) {
  throw DocumentError(ErrorKind::Invariant, pointer, what);
}

[[noreturn]] void schema(const std::string& pointer, const std::string& what) {
  throw DocumentError(ErrorKind::Schema, pointer, what);
}

constexpr long kIndexCap = 1L << 22;

}  // namespace

// ---------------------------------------------------------------------------
// JumpSeries

JumpSeries::JumpSeries(Side side, double c, double r, std::vector<GeometricTerm> terms)
    : side_(side), c_(c), r_(r), terms_(std::move(terms)) {
  if (!(std::isfinite(c_) && c_ > 0.0)) invariant("/series/c", "series scale c must be positive");
  if (!(r_ > 0.0 && r_ < 1.0)) invariant("/series/r", "series ratio r must lie in (0, 1)");
  if (terms_.empty()) invariant("/series", "series needs at least one term");
  for (const auto& t : terms_) {
    if (!std::isfinite(t.A)) invariant("/series/A", "series amplitude must be finite");
    if (!(std::abs(t.q) < 1.0)) invariant("/series/q", "series decay |q| must be < 1");
  }
}

double JumpSeries::location(long k, double a, double b) const {
  const double d = c_ * std::pow(r_, static_cast<double>(k));
  return side_ == Side::Left ? a + d : b - d;
}

double JumpSeries::magnitude(long k) const {
  double m = 0.0;
  for (const auto& t : terms_) m += t.A * std::pow(t.q, static_cast<double>(k));
  return m;
}

double JumpSeries::tail_bound(long n) const {
  double s = 0.0;
  for (const auto& t : terms_) {
    const double aq = std::abs(t.q);
    s += std::abs(t.A) * std::pow(aq, static_cast<double>(n + 1)) / (1.0 - aq);
  }
  return s * (1.0 + 1e-15);
}

long JumpSeries::terms_for(double tol) const {
  long lo = -1;
  if (tail_bound(lo) <= tol) return lo;
  long hi = 1;
  while (tail_bound(hi) > tol) {
    if (hi >= kIndexCap) return kIndexCap;
    hi *= 2;
  }
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    if (tail_bound(mid) <= tol) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double JumpSeries::sum_from(long k0) const {
  double s = 0.0;
  for (const auto& t : terms_) s += t.A * std::pow(t.q, static_cast<double>(k0)) / (1.0 - t.q);
  return s;
}

double JumpSeries::sum_below(long k1) const {
  if (k1 <= 0) return 0.0;
  double s = 0.0;
  for (const auto& t : terms_) s += t.A * (1.0 - std::pow(t.q, static_cast<double>(k1))) / (1.0 - t.q);
  return s;
}

bool JumpSeries::same_generator(const JumpSeries& o) const {
  return side_ == o.side_ && c_ == o.c_ && r_ == o.r_;
}

JumpSeries JumpSeries::scaled(double s) const {
  std::vector<GeometricTerm> t = terms_;
  for (auto& x : t) x.A *= s;
  return JumpSeries(side_, c_, r_, std::move(t));
}

JumpSeries JumpSeries::plus(const JumpSeries& o) const {
  if (!same_generator(o))
    fail(ErrorKind::UnsupportedSeries, "jump series with different location generators cannot be combined");
  std::vector<GeometricTerm> t = terms_;
  for (const auto& x : o.terms_) {
    auto it = std::find_if(t.begin(), t.end(), [&](const GeometricTerm& y) { return y.q == x.q; });
    if (it != t.end()) {
      it->A += x.A;
    } else {
      t.push_back(x);
    }
  }
  return JumpSeries(side_, c_, r_, std::move(t));
}

json JumpSeries::to_json() const {
  json j{{"kind", "geometric"}, {"side", side_ == Side::Left ? "left" : "right"}, {"c", c_}, {"r", r_}};
  if (terms_.size() == 1) {
    j["A"] = terms_[0].A;
    j["q"] = terms_[0].q;
  } else {
    json arr = json::array();
    for (const auto& t : terms_) arr.push_back({{"A", t.A}, {"q", t.q}});
    j["terms"] = arr;
  }
  return j;
}

// ---------------------------------------------------------------------------
// RepFunc

RepFunc::RepFunc(double a, double b, Parts parts, double continuity_tol)
    : a_(a), b_(b), parts_(std::move(parts)) {
  validate(continuity_tol);
}

RepFunc RepFunc::constant(double a, double b, double c) {
  Parts p;
  p.c0 = c;
  return RepFunc(a, b, std::move(p));
}

RepFunc RepFunc::from_expr(double a, double b, const Expr& e) {
  Parts p;
  p.pieces.push_back({a, b, e});
  return RepFunc(a, b, std::move(p));
}

RepFunc RepFunc::unit(double a, double b, const Location& c) {
  Parts p;
  p.jumps.push_back({c, 0.0, 1.0});
  return RepFunc(a, b, std::move(p));
}

void RepFunc::validate(double continuity_tol) {
  if (!(std::isfinite(a_) && std::isfinite(b_) && a_ < b_)) invariant("/domain", "domain must satisfy a < b");
  if (!std::isfinite(parts_.c0)) invariant("/c0", "c0 must be finite");

  auto& pieces = parts_.pieces;
  if (!pieces.empty()) {
    std::vector<std::size_t> order(pieces.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return pieces[i].u < pieces[j].u; });
    std::vector<Piece> sorted;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const Piece& p = pieces[order[k]];
      const std::string ptr = "/continuous/" + std::to_string(order[k]) + "/on";
      if (!(p.u < p.v)) invariant(ptr, "piece needs u < v");
      if (k == 0 && p.u != a_) invariant(ptr, "pieces must start at the domain start");
      if (k > 0) {
        const Piece& prev = sorted.back();
        if (p.u < prev.v) invariant(ptr, "pieces overlap");
        if (p.u > prev.v) invariant(ptr, "gap between pieces");
        if (continuity_tol >= 0.0) {
          const double l = prev.expr(p.u);
          const double r = p.expr(p.u);
          if (!(std::abs(l - r) <= continuity_tol * std::max(1.0, std::abs(l))))
            invariant(ptr, "continuous part is discontinuous at a shared breakpoint");
        }
      }
      sorted.push_back(p);
    }
    if (sorted.back().v != b_) invariant("/continuous/" + std::to_string(order.back()) + "/on", "pieces must end at the domain end");
    pieces = std::move(sorted);
  }

  if (parts_.series) {
    const auto& s = *parts_.series;
    const double first = s.location(0, a_, b_);
    if (!(first > a_ && first < b_)) invariant("/series/c", "series locations must lie inside the domain");
    // Locations must stay distinct in binary64 while the tail still matters.
    long k = 0;
    double prev = first;
    while (true) {
      const double next = s.location(k + 1, a_, b_);
      const bool collided = next == prev || next <= a_ || next >= b_;
      if (collided) {
        if (s.tail_bound(k) > 1e-15)
          invariant("/series", "series locations collide in binary64 before the tail is negligible");
        break;
      }
      if (s.tail_bound(k) <= 1e-300) break;
      prev = next;
      if (++k > kIndexCap) break;
    }
  }

  auto& jumps = parts_.jumps;
  {
    std::vector<std::size_t> order(jumps.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < jumps.size(); ++i) {
      const auto& j = jumps[i];
      const std::string ptr = "/jumps/" + std::to_string(i);
      const double t = j.loc.value();
      if (!std::isfinite(j.left) || !std::isfinite(j.right)) invariant(ptr, "jump sizes must be finite");
      if (!(t >= a_ && t <= b_)) invariant(ptr + "/t", "jump location outside the domain");
      if (t == a_ && j.left != 0.0) invariant(ptr + "/left", "left jump at the domain start must be 0");
      if (t == b_ && j.right != 0.0) invariant(ptr + "/right", "right jump at the domain end must be 0");
      if (series_index_at(t)) invariant(ptr + "/t", "jump location coincides with a series location");
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
      return jumps[i].loc.value() < jumps[j].loc.value();
    });
    std::vector<JumpRecord> sorted;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& j = jumps[order[k]];
      if (!sorted.empty() && (sorted.back().loc == j.loc || sorted.back().loc.value() == j.loc.value()))
        invariant("/jumps/" + std::to_string(std::max(order[k], order[k - 1])) + "/t", "duplicate jump location");
      sorted.push_back(j);
    }
    jumps = std::move(sorted);
  }

  auto& ovs = parts_.overrides;
  {
    std::vector<std::size_t> order(ovs.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < ovs.size(); ++i) {
      const std::string ptr = "/overrides/" + std::to_string(i);
      const double t = ovs[i].loc.value();
      if (!std::isfinite(ovs[i].value)) invariant(ptr + "/value", "override value must be finite");
      if (!(t > a_ && t < b_)) invariant(ptr + "/t", "overrides must lie strictly inside the domain");
      if (jump_at(t)) invariant(ptr + "/t", "override at a jump location");
      if (series_index_at(t)) invariant(ptr + "/t", "override at a series location");
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
      return ovs[i].loc.value() < ovs[j].loc.value();
    });
    std::vector<Override> sorted;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& o = ovs[order[k]];
      if (!sorted.empty() && sorted.back().loc.value() == o.loc.value())
        invariant("/overrides/" + std::to_string(std::max(order[k], order[k - 1])) + "/t", "duplicate override location");
      sorted.push_back(o);
    }
    ovs = std::move(sorted);
  }

  prefix_.assign(jumps.size() + 1, 0.0);
  for (std::size_t i = 0; i < jumps.size(); ++i) prefix_[i + 1] = prefix_[i] + jumps[i].sigma();
}

const JumpRecord* RepFunc::jump_at(double t) const {
  const auto& j = parts_.jumps;
  // The list may be unsorted while validating; fall back to a scan then.
  if (prefix_.size() != j.size() + 1) {
    for (const auto& r : j)
      if (r.loc.value() == t) return &r;
    return nullptr;
  }
  auto it = std::lower_bound(j.begin(), j.end(), t, [](const JumpRecord& r, double v) { return r.loc.value() < v; });
  if (it != j.end() && it->loc.value() == t) return &*it;
  return nullptr;
}

const Override* RepFunc::override_at(double t) const {
  const auto& o = parts_.overrides;
  auto it = std::lower_bound(o.begin(), o.end(), t, [](const Override& r, double v) { return r.loc.value() < v; });
  if (it != o.end() && it->loc.value() == t) return &*it;
  return nullptr;
}

std::optional<long> RepFunc::series_index_at(double t) const {
  if (!parts_.series) return std::nullopt;
  const auto& s = *parts_.series;
  const double d = s.side() == JumpSeries::Side::Left ? t - a_ : b_ - t;
  if (!(d > 0.0)) return std::nullopt;
  const double kf = std::log(d / s.c()) / std::log(s.r());
  if (!std::isfinite(kf) || kf < -1.0 || kf > static_cast<double>(kIndexCap)) return std::nullopt;
  const long k0 = std::max(0L, static_cast<long>(std::llround(kf)));
  for (long k = std::max(0L, k0 - 2); k <= k0 + 2; ++k)
    if (s.location(k, a_, b_) == t) return k;
  return std::nullopt;
}

double RepFunc::series_part(double t, bool inclusive) const {
  if (!parts_.series) return 0.0;
  const auto& s = *parts_.series;
  auto below = [&](double loc) { return inclusive ? loc <= t : loc < t; };
  if (s.side() == JumpSeries::Side::Left) {
    if (t <= a_) return 0.0;
    // Smallest k with location below t; locations decrease to a.
    const double kf = std::log((t - a_) / s.c()) / std::log(s.r());
    long k = std::isfinite(kf) ? std::clamp(static_cast<long>(std::floor(kf)), 0L, kIndexCap) : 0L;
    while (k > 0 && below(s.location(k - 1, a_, b_))) --k;
    long guard = 0;
    while (!below(s.location(k, a_, b_)) && guard++ < kIndexCap) ++k;
    return s.sum_from(k);
  }
  if (t >= b_) return s.sum_from(0);
  // Count of locations below t; locations increase to b.
  const double kf = std::log((b_ - t) / s.c()) / std::log(s.r());
  long k = std::isfinite(kf) ? std::clamp(static_cast<long>(std::floor(kf)), 0L, kIndexCap) : 0L;
  while (k > 0 && !below(s.location(k - 1, a_, b_))) --k;
  long guard = 0;
  while (below(s.location(k, a_, b_)) && guard++ < kIndexCap) ++k;
  return s.sum_below(k);
}

int RepFunc::piece_index(double t) const {
  const auto& p = parts_.pieces;
  if (p.empty()) return -1;
  auto it = std::upper_bound(p.begin(), p.end(), t, [](double v, const Piece& x) { return v < x.u; });
  if (it == p.begin()) return 0;
  return static_cast<int>(std::distance(p.begin(), it) - 1);
}

double RepFunc::continuous_at(double t) const {
  const int i = piece_index(t);
  if (i < 0) return parts_.c0;
  return parts_.c0 + parts_.pieces[static_cast<std::size_t>(i)].expr(t);
}

double RepFunc::continuous_derivative(double t) const {
  const int i = piece_index(t);
  if (i < 0) return 0.0;
  return parts_.pieces[static_cast<std::size_t>(i)].expr.derivative_at(t);
}

double RepFunc::discrete_at(double t) const {
  if (t <= a_) return 0.0;
  const auto& j = parts_.jumps;
  auto it = std::lower_bound(j.begin(), j.end(), t, [](const JumpRecord& r, double v) { return r.loc.value() < v; });
  const auto idx = static_cast<std::size_t>(std::distance(j.begin(), it));
  double s = prefix_[idx];
  if (it != j.end() && it->loc.value() == t) s += it->left;
  return s + series_part(t, false);
}

double RepFunc::eval(double t) const {
  if (!(t >= a_ && t <= b_))
    fail(ErrorKind::Domain, "t = " + format_double(t) + " outside [" + format_double(a_) + ", " + format_double(b_) + "]");
  if (const auto* o = override_at(t)) return o->value;
  return core_at(t);
}

PointInfo RepFunc::limits(double t) const {
  PointInfo r;
  r.value = eval(t);
  const double core = core_at(t);
  const double fc = continuous_at(t);
  const auto& j = parts_.jumps;
  auto lo = std::lower_bound(j.begin(), j.end(), t, [](const JumpRecord& x, double v) { return x.loc.value() < v; });
  auto hi = std::upper_bound(j.begin(), j.end(), t, [](double v, const JumpRecord& x) { return v < x.loc.value(); });
  r.left_limit = t == a_ ? core : fc + prefix_[static_cast<std::size_t>(lo - j.begin())] + series_part(t, false);
  r.right_limit = t == b_ ? core : fc + prefix_[static_cast<std::size_t>(hi - j.begin())] + series_part(t, true);
  r.sigma_minus = core - r.left_limit;
  r.sigma_plus = r.right_limit - core;
  // Exact record values where available avoid cancellation.
  if (const auto* rec = jump_at(t)) {
    r.sigma_minus = rec->left;
    r.sigma_plus = rec->right;
  } else if (auto k = series_index_at(t)) {
    r.sigma_minus = 0.0;
    r.sigma_plus = parts_.series->magnitude(*k);
  } else {
    r.sigma_minus = 0.0;
    r.sigma_plus = 0.0;
  }
  r.sigma = r.sigma_minus + r.sigma_plus;
  return r;
}

std::pair<double, double> side_jumps(const RepFunc& f, double t) {
  if (const auto* j = f.jump_at(t)) return {j->left, j->right};
  if (const auto* o = f.override_at(t)) {
    const double d = o->value - f.core_at(t);
    return {d, -d};
  }
  const PointInfo li = f.limits(t);
  return {li.sigma_minus, li.sigma_plus};
}

bool discontinuous_at(const RepFunc& f, double t) {
  if (const auto* j = f.jump_at(t)) return j->left != 0.0 || j->right != 0.0;
  if (const auto* o = f.override_at(t)) return o->value != f.core_at(t);
  if (auto k = f.series_index_at(t)) return f.series()->magnitude(*k) != 0.0;
  return false;
}

std::vector<double> RepFunc::breakpoints() const {
  std::vector<double> out{a_};
  for (const auto& p : parts_.pieces)
    if (p.u > a_) out.push_back(p.u);
  out.push_back(b_);
  return out;
}

std::vector<Location> RepFunc::special_points() const {
  std::vector<Location> out;
  for (const auto& j : parts_.jumps) out.push_back(j.loc);
  for (const auto& o : parts_.overrides) out.push_back(o.loc);
  std::sort(out.begin(), out.end());
  return out;
}

double RepFunc::jump_mass() const {
  double m = 0.0;
  for (const auto& j : parts_.jumps) m += std::abs(j.left) + std::abs(j.right);
  if (parts_.series) m += parts_.series->tail_bound(-1);
  return m;
}

json RepFunc::to_json() const {
  json j;
  j["domain"] = {a_, b_};
  j["c0"] = parts_.c0;
  json cont = json::array();
  for (const auto& p : parts_.pieces) cont.push_back({{"on", {p.u, p.v}}, {"expr", p.expr.to_json()}});
  j["continuous"] = cont;
  json jumps = json::array();
  for (const auto& r : parts_.jumps) jumps.push_back({{"t", r.loc.str()}, {"left", r.left}, {"right", r.right}});
  j["jumps"] = jumps;
  if (parts_.series) j["series"] = parts_.series->to_json();
  json ovs = json::array();
  for (const auto& o : parts_.overrides) ovs.push_back({{"t", o.loc.str()}, {"value", o.value}});
  j["overrides"] = ovs;
  return j;
}

// ---------------------------------------------------------------------------
// Documents

namespace {

double number_at(const json& j, const std::string& key, const std::string& ptr) {
  if (!j.contains(key)) schema(ptr, "missing field '" + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number()) schema(ptr + "/" + key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) schema(ptr + "/" + key, "non-finite number");
  return d;
}

Location location_at(const json& j, const std::string& ptr) {
  if (!j.contains("t")) schema(ptr, "missing field 't'");
  const auto& v = j.at("t");
  if (!v.is_string()) schema(ptr + "/t", "location must be a decimal string");
  try {
    return Location::from_token(v.get<std::string>());
  } catch (const std::invalid_argument&) {
    schema(ptr + "/t", "malformed decimal location");
  }
}

const json& array_at(const json& doc, const char* key) {
  static const json empty = json::array();
  if (!doc.contains(key)) return empty;
  const auto& v = doc.at(key);
  if (!v.is_array()) schema(std::string("/") + key, "expected an array");
  return v;
}

void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& ptr) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) schema(ptr + "/" + it.key(), "unknown field '" + it.key() + "'");
  }
}

}  // namespace

RepFunc make_func(const json& doc) {
  if (!doc.is_object()) schema("", "function document must be an object");
  only_keys(doc, {"domain", "c0", "continuous", "jumps", "series", "overrides"}, "");
  if (!doc.contains("domain")) schema("", "missing field 'domain'");
  const auto& dom = doc.at("domain");
  if (!dom.is_array() || dom.size() != 2 || !dom[0].is_number() || !dom[1].is_number())
    schema("/domain", "domain must be [a, b]");
  const double a = dom[0].get<double>();
  const double b = dom[1].get<double>();

  RepFunc::Parts parts;
  if (doc.contains("c0")) parts.c0 = number_at(doc, "c0", "");

  const auto& cont = array_at(doc, "continuous");
  for (std::size_t i = 0; i < cont.size(); ++i) {
    const std::string ptr = "/continuous/" + std::to_string(i);
    const auto& p = cont[i];
    if (!p.is_object()) schema(ptr, "piece must be an object");
    only_keys(p, {"on", "expr"}, ptr);
    if (!p.contains("on") || !p.at("on").is_array() || p.at("on").size() != 2 || !p.at("on")[0].is_number() ||
        !p.at("on")[1].is_number())
      schema(ptr + "/on", "piece interval must be [u, v]");
    if (!p.contains("expr")) schema(ptr, "missing field 'expr'");
    parts.pieces.push_back({p.at("on")[0].get<double>(), p.at("on")[1].get<double>(), Expr::from_json(p.at("expr"), ptr + "/expr")});
  }

  const auto& jumps = array_at(doc, "jumps");
  for (std::size_t i = 0; i < jumps.size(); ++i) {
    const std::string ptr = "/jumps/" + std::to_string(i);
    const auto& j = jumps[i];
    if (!j.is_object()) schema(ptr, "jump must be an object");
    only_keys(j, {"t", "left", "right"}, ptr);
    parts.jumps.push_back({location_at(j, ptr), number_at(j, "left", ptr), number_at(j, "right", ptr)});
  }

  if (doc.contains("series") && !doc.at("series").is_null()) {
    const auto& s = doc.at("series");
    const std::string ptr = "/series";
    if (!s.is_object()) schema(ptr, "series must be an object");
    only_keys(s, {"kind", "side", "c", "r", "A", "q"}, ptr);
    if (!s.contains("kind") || s.at("kind") != "geometric") schema(ptr + "/kind", "only geometric series are supported");
    if (!s.contains("side") || !s.at("side").is_string()) schema(ptr + "/side", "side must be \"left\" or \"right\"");
    const std::string side = s.at("side").get<std::string>();
    if (side != "left" && side != "right") schema(ptr + "/side", "side must be \"left\" or \"right\"");
    parts.series.emplace(side == "left" ? JumpSeries::Side::Left : JumpSeries::Side::Right, number_at(s, "c", ptr),
                         number_at(s, "r", ptr), std::vector<GeometricTerm>{{number_at(s, "A", ptr), number_at(s, "q", ptr)}});
  }

  const auto& ovs = array_at(doc, "overrides");
  for (std::size_t i = 0; i < ovs.size(); ++i) {
    const std::string ptr = "/overrides/" + std::to_string(i);
    const auto& o = ovs[i];
    if (!o.is_object()) schema(ptr, "override must be an object");
    only_keys(o, {"t", "value"}, ptr);
    parts.overrides.push_back({location_at(o, ptr), number_at(o, "value", ptr)});
  }
  return RepFunc(a, b, std::move(parts));
}

void require_same_domain(const RepFunc& f, const RepFunc& g) {
  if (f.a() != g.a() || f.b() != g.b())
    fail(ErrorKind::DomainMismatch, "domains differ: [" + format_double(f.a()) + ", " + format_double(f.b()) + "] vs [" +
                                        format_double(g.a()) + ", " + format_double(g.b()) + "]");
}

// ---------------------------------------------------------------------------
// Decompositions

std::pair<RepFunc, RepFunc> decompose(const RepFunc& f) {
  RepFunc::Parts c;
  c.c0 = f.c0();
  c.pieces = f.pieces();
  RepFunc fc(f.a(), f.b(), std::move(c), -1.0);
  RepFunc::Parts d;
  d.jumps = f.jumps();
  d.series = f.series();
  for (const auto& o : f.overrides()) d.overrides.push_back({o.loc, o.value - fc(o.loc.value())});
  return {fc, RepFunc(f.a(), f.b(), std::move(d), -1.0)};
}

std::pair<RepFunc, RepFunc> rl_split(const RepFunc& f) {
  RepFunc::Parts plus;
  RepFunc::Parts minus;
  for (const auto& j : f.jumps()) {
    if (j.left != 0.0) plus.jumps.push_back({j.loc, j.left, 0.0});
    if (j.right != 0.0) minus.jumps.push_back({j.loc, 0.0, j.right});
  }
  RepFunc fp(f.a(), f.b(), std::move(plus), -1.0);
  minus.c0 = f.c0();
  minus.pieces = f.pieces();
  minus.series = f.series();
  for (const auto& o : f.overrides()) minus.overrides.push_back({o.loc, o.value - fp(o.loc.value())});
  return {fp, RepFunc(f.a(), f.b(), std::move(minus), -1.0)};
}

// ---------------------------------------------------------------------------
// Algebra

namespace {

const Expr& zero_expr() {
  static const Expr z;
  return z;
}

Expr piece_expr_on(const RepFunc& f, double u, double v) {
  if (f.pieces().empty()) return zero_expr();
  const int i = f.piece_index(0.5 * (u + v));
  return f.pieces()[static_cast<std::size_t>(i)].expr;
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

RepFunc add(const RepFunc& f, const RepFunc& g) {
  require_same_domain(f, g);
  RepFunc::Parts p;
  p.c0 = f.c0() + g.c0();
  if (!f.pieces().empty() || !g.pieces().empty()) {
    std::vector<double> pts = f.breakpoints();
    const auto gb = g.breakpoints();
    pts.insert(pts.end(), gb.begin(), gb.end());
    pts = sorted_unique(pts);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
      p.pieces.push_back({pts[i], pts[i + 1], piece_expr_on(f, pts[i], pts[i + 1]) + piece_expr_on(g, pts[i], pts[i + 1])});
  }
  std::map<double, JumpRecord> jumps;
  for (const auto* h : {&f, &g}) {
    for (const auto& j : h->jumps()) {
      auto [it, inserted] = jumps.try_emplace(j.loc.value(), j);
      if (!inserted) {
        it->second.left += j.left;
        it->second.right += j.right;
      }
    }
  }
  if (f.series() && g.series()) {
    p.series = f.series()->plus(*g.series());
  } else if (f.series()) {
    p.series = f.series();
  } else if (g.series()) {
    p.series = g.series();
  }
  std::map<double, Override> ovs;
  for (const auto* h : {&f, &g}) {
    for (const auto& o : h->overrides()) {
      const double t = o.loc.value();
      if (ovs.count(t)) continue;
      const double value = f(t) + g(t);
      const double core = f.core_at(t) + g.core_at(t);
      const double delta = value - core;
      if (auto it = jumps.find(t); it != jumps.end()) {
        it->second.left += delta;
        it->second.right -= delta;
      } else {
        ovs.emplace(t, Override{o.loc, value});
      }
    }
  }
  for (auto& [t, j] : jumps)
    if (j.left != 0.0 || j.right != 0.0) p.jumps.push_back(j);
  for (auto& [t, o] : ovs) p.overrides.push_back(o);
  return RepFunc(f.a(), f.b(), std::move(p), -1.0);
}

RepFunc scale(const RepFunc& f, double c) {
  if (c == 0.0) return RepFunc::constant(f.a(), f.b(), 0.0);
  RepFunc::Parts p;
  p.c0 = c * f.c0();
  for (const auto& x : f.pieces()) p.pieces.push_back({x.u, x.v, Expr::scale(c, x.expr)});
  for (const auto& j : f.jumps()) p.jumps.push_back({j.loc, c * j.left, c * j.right});
  if (f.series()) p.series = f.series()->scaled(c);
  for (const auto& o : f.overrides()) p.overrides.push_back({o.loc, c * o.value});
  return RepFunc(f.a(), f.b(), std::move(p), -1.0);
}

RepFunc add_constant(const RepFunc& f, double c) {
  RepFunc::Parts p = f.parts();
  p.c0 += c;
  for (auto& o : p.overrides) o.value += c;
  return RepFunc(f.a(), f.b(), std::move(p), -1.0);
}

RepFunc subtract(const RepFunc& f, const RepFunc& g) { return add(f, scale(g, -1.0)); }

Location location_for(double t, const std::vector<const RepFunc*>& fs) {
  for (const auto* f : fs) {
    if (const auto* j = f->jump_at(t)) return j->loc;
    if (const auto* o = f->override_at(t)) return o->loc;
  }
  return Location::from_value(t);
}

std::vector<double> merged_points(const std::vector<const RepFunc*>& fs, const std::vector<double>& extra) {
  std::vector<double> pts;
  for (const auto* f : fs) {
    const auto b = f->breakpoints();
    pts.insert(pts.end(), b.begin(), b.end());
    for (const auto& s : f->special_points()) pts.push_back(s.value());
  }
  pts.insert(pts.end(), extra.begin(), extra.end());
  return sorted_unique(pts);
}

std::vector<Cell> cells_of(const RepFunc& f, const std::vector<double>& points) {
  if (f.has_series()) fail(ErrorKind::UnsupportedSeries, "cell decomposition needs a finite jump set");
  std::vector<Cell> cells;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double u = points[i];
    const double v = points[i + 1];
    const double m = 0.5 * (u + v);
    cells.push_back({u, v, piece_expr_on(f, u, v) + (f.c0() + f.discrete_at(m))});
  }
  return cells;
}

RepFunc from_cells(double a, double b, const std::vector<Cell>& cells,
                   const std::vector<std::pair<Location, double>>& values) {
  std::map<double, std::pair<Location, double>> at;
  for (const auto& [loc, v] : values) at.emplace(loc.value(), std::make_pair(loc, v));
  RepFunc::Parts p;
  double d = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& c = cells[i];
    auto it = at.find(c.u);
    if (it != at.end()) {
      const double value = it->second.second;
      const double sm = i == 0 ? 0.0 : value - cells[i - 1].expr(c.u);
      const double sp = c.expr(c.u) - value;
      if (sm != 0.0 || sp != 0.0) p.jumps.push_back({it->second.first, sm, sp});
      d += sm + sp;
    }
    p.pieces.push_back({c.u, c.v, c.expr + (-d)});
  }
  if (auto it = at.find(b); it != at.end() && !cells.empty()) {
    const double sm = it->second.second - cells.back().expr(b);
    if (sm != 0.0) p.jumps.push_back({it->second.first, sm, 0.0});
  }
  return RepFunc(a, b, std::move(p), -1.0);
}

RepFunc mul(const RepFunc& f, const RepFunc& g) {
  require_same_domain(f, g);
  if (f.has_series() || g.has_series())
    fail(ErrorKind::UnsupportedProduct, "products with jump series are not supported");
  const std::vector<const RepFunc*> fs{&f, &g};
  const auto pts = merged_points(fs);
  const auto cf = cells_of(f, pts);
  const auto cg = cells_of(g, pts);
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < cf.size(); ++i) cells.push_back({cf[i].u, cf[i].v, cf[i].expr * cg[i].expr});
  std::vector<std::pair<Location, double>> values;
  for (const auto* h : fs)
    for (const auto& s : h->special_points()) values.emplace_back(location_for(s.value(), fs), f(s.value()) * g(s.value()));
  return from_cells(f.a(), f.b(), cells, values);
}

std::pair<RepFunc, double> truncate_series(const RepFunc& f, double tol) {
  if (!f.has_series()) return {f, 0.0};
  const auto& s = *f.series();
  long n = s.terms_for(tol);
  // Stay within the range where generated locations are distinct.
  long k = 0;
  double prev = s.location(0, f.a(), f.b());
  while (k < n) {
    const double next = s.location(k + 1, f.a(), f.b());
    if (next == prev || next <= f.a() || next >= f.b()) break;
    prev = next;
    ++k;
  }
  n = std::min(n, k);
  RepFunc::Parts p = f.parts();
  p.series.reset();
  for (long i = 0; i <= n; ++i) {
    const double m = s.magnitude(i);
    if (m != 0.0) p.jumps.push_back({Location::from_value(s.location(i, f.a(), f.b())), 0.0, m});
  }
  return {RepFunc(f.a(), f.b(), std::move(p), -1.0), s.tail_bound(n)};
}

RepFunc drop_overrides(const RepFunc& f) {
  RepFunc::Parts p = f.parts();
  p.overrides.clear();
  return RepFunc(f.a(), f.b(), std::move(p), -1.0);
}

namespace {

template <typename Map>
RepFunc transform_cells(const RepFunc& f0, const Options& opt, Map&& map_expr, double (*map_value)(double, double), double p) {
  const RepFunc f = truncate_series(f0, opt.series_tol).first;
  const std::vector<const RepFunc*> fs{&f};
  const auto pts = merged_points(fs);
  std::vector<Cell> cells;
  for (const auto& c : cells_of(f, pts)) {
    std::vector<double> cuts{c.u};
    if (!c.expr.is_constant()) {
      for (double r : isolate_roots(c.expr, c.u, c.v))
        if (r > cuts.back() && r < c.v) cuts.push_back(r);
    }
    cuts.push_back(c.v);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double m = 0.5 * (cuts[i] + cuts[i + 1]);
      const double sgn = c.expr(m) < 0.0 ? -1.0 : 1.0;
      cells.push_back({cuts[i], cuts[i + 1], map_expr(Expr::scale(sgn, c.expr))});
    }
  }
  std::vector<std::pair<Location, double>> values;
  for (const auto& s : f.special_points()) values.emplace_back(s, map_value(f(s.value()), p));
  return from_cells(f.a(), f.b(), cells, values);
}

}  // namespace

RepFunc abs(const RepFunc& f, const Options& opt) {
  return transform_cells(f, opt, [](const Expr& e) { return e; }, [](double v, double) { return std::abs(v); }, 1.0);
}

RepFunc pow_abs(const RepFunc& f, double p, const Options& opt) {
  if (!(p > 0.0)) fail(ErrorKind::BadExponent, "exponent must be positive");
  if (p == 1.0) return abs(f, opt);
  return transform_cells(
      f, opt, [p](const Expr& e) { return Expr::pow_abs(e, p); },
      [](double v, double q) { return std::pow(std::abs(v), q); }, p);
}

RepFunc restrict(const RepFunc& f, double c, double d) {
  if (f.has_series()) fail(ErrorKind::UnsupportedSeries, "restriction of a function with a jump series");
  if (!(c >= f.a() && d <= f.b() && c < d)) fail(ErrorKind::Domain, "restriction interval outside the domain");
  const std::vector<const RepFunc*> fs{&f};
  std::vector<double> pts{c, d};
  for (double t : merged_points(fs))
    if (t > c && t < d) pts.push_back(t);
  pts = sorted_unique(pts);
  const auto cells = cells_of(f, pts);
  std::vector<std::pair<Location, double>> values;
  for (const auto& s : f.special_points()) {
    const double t = s.value();
    if (t >= c && t <= d) values.emplace_back(s, f(t));
  }
  RepFunc r = from_cells(c, d, cells, values);
  // Re-attach overrides as overrides (from_cells turns them into removable jumps).
  RepFunc::Parts p = r.parts();
  std::vector<JumpRecord> kept;
  for (const auto& j : p.jumps) {
    const auto* o = f.override_at(j.loc.value());
    if (o && j.loc.value() > c && j.loc.value() < d) {
      p.overrides.push_back({o->loc, o->value});
    } else {
      kept.push_back(j);
    }
  }
  p.jumps = std::move(kept);
  return RepFunc(c, d, std::move(p), -1.0);
}

// ---------------------------------------------------------------------------
// Ranges

Interval range(const RepFunc& f0, double l, double r) {
  auto [f, dropped] = truncate_series(f0, 1e-15 * std::max(1.0, f0.jump_mass()));
  const std::vector<const RepFunc*> fs{&f};
  std::vector<double> pts{l, r};
  for (double t : merged_points(fs))
    if (t > l && t < r) pts.push_back(t);
  pts = sorted_unique(pts);
  Interval out(f(l));
  out = hull(out, Interval(f(r)));
  for (const auto& c : cells_of(f, pts)) {
    if (c.u == c.v) continue;
    out = hull(out, expr_range(c.expr, c.u, c.v));
  }
  for (const auto& s : f.special_points()) {
    const double t = s.value();
    if (t >= l && t <= r) out = hull(out, Interval(f(t)));
  }
  if (dropped > 0.0) out = Interval(out.lo - dropped, out.hi + dropped);
  return out;
}

double sup_abs(const RepFunc& f) { return range(f, f.a(), f.b()).mag(); }

// ---------------------------------------------------------------------------
// Step functions

double StepFunc::eval(double t) const {
  auto it = std::lower_bound(breakpoints.begin(), breakpoints.end(), t);
  if (it != breakpoints.end() && *it == t) return node_values[static_cast<std::size_t>(it - breakpoints.begin())];
  if (it == breakpoints.begin() || it == breakpoints.end())
    fail(ErrorKind::Domain, "t = " + format_double(t) + " outside the step function domain");
  return values[static_cast<std::size_t>(it - breakpoints.begin()) - 1];
}

RepFunc StepFunc::to_repfunc(const std::vector<const RepFunc*>& token_sources) const {
  std::vector<Cell> cells;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
    cells.push_back({breakpoints[i], breakpoints[i + 1], Expr::constant(values[i])});
  std::vector<std::pair<Location, double>> vals;
  for (std::size_t i = 0; i < breakpoints.size(); ++i)
    vals.emplace_back(location_for(breakpoints[i], token_sources), node_values[i]);
  return from_cells(breakpoints.front(), breakpoints.back(), cells, vals);
}

StepFunc step_approx(const RepFunc& f0, double eps) {
  if (!(eps > 0.0)) fail(ErrorKind::Domain, "eps must be positive");
  auto [f, dropped] = truncate_series(f0, eps / 4.0);
  const double budget = eps - dropped;
  const std::vector<const RepFunc*> fs{&f};
  StepFunc s;
  s.breakpoints.push_back(f.a());
  long pieces = 0;
  constexpr long kMaxPieces = 1L << 22;
  for (const auto& c : cells_of(f, merged_points(fs))) {
    const Expr d = c.expr.derivative();
    const double lip = d.enclose(Interval(c.u, c.v)).mag();
    const double len = c.v - c.u;
    double n = std::isfinite(lip) ? std::ceil(lip * len / budget * (1.0 - 1e-12)) : 1.0;
    n = std::max(n, 1.0);
    if (n > static_cast<double>(kMaxPieces)) fail(ErrorKind::BudgetExceeded, "step approximation needs too many pieces");
    const long count = static_cast<long>(n);
    std::vector<std::pair<double, double>> todo;
    for (long k = count; k-- > 0;) {
      const double l = k == 0 ? c.u : c.u + len * static_cast<double>(k) / n;
      const double r = k == count - 1 ? c.v : c.u + len * static_cast<double>(k + 1) / n;
      todo.emplace_back(l, r);
    }
    int depth_guard = 0;
    while (!todo.empty()) {
      auto [l, r] = todo.back();
      todo.pop_back();
      const double mid = c.expr(0.5 * (l + r));
      const Interval e = c.expr.enclose(Interval(l, r));
      if (e.lo >= mid - budget && e.hi <= mid + budget) {
        s.values.push_back(mid);
        s.breakpoints.push_back(r);
        if (++pieces > kMaxPieces) fail(ErrorKind::BudgetExceeded, "step approximation needs too many pieces");
        continue;
      }
      if (r - l <= 1e-14 * std::max(1.0, std::abs(l)) || ++depth_guard > (1 << 22))
        fail(ErrorKind::BudgetExceeded, "step approximation could not certify the tolerance");
      const double m = 0.5 * (l + r);
      todo.emplace_back(m, r);
      todo.emplace_back(l, m);
    }
  }
  for (double t : s.breakpoints) s.node_values.push_back(f0(t));
  return s;
}

// ---------------------------------------------------------------------------
// Root isolation

namespace {

struct RootSearch {
  const Expr& e;
  const Expr& d;
  int max_depth;
  long budget = 200000;
  RootScan out;

  void run(double l, double r, double fl, double fr, int depth) {
    if (--budget < 0) {
      out.uncertain.emplace_back(l, r);
      return;
    }
    if (fl == 0.0) out.roots.push_back(l);
    if (fr == 0.0) out.roots.push_back(r);
    const Interval enc = e.enclose(Interval(l, r));
    if (!enc.contains_zero()) return;
    const Interval de = d.enclose(Interval(l, r));
    if (!de.contains_zero()) {
      if ((fl < 0.0 && fr > 0.0) || (fl > 0.0 && fr < 0.0)) {
        boost::uintmax_t iters = 200;
        const auto fn = [this](double t) { return e(t); };
        const auto [x0, x1] = boost::math::tools::toms748_solve(fn, l, r, fl, fr, boost::math::tools::eps_tolerance<double>(52), iters);
        out.roots.push_back(0.5 * (x0 + x1));
      }
      return;
    }
    if (depth >= max_depth || r - l <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(l))) {
      if (fl * fr < 0.0 || std::abs(fl) <= enc.width() || std::abs(fr) <= enc.width()) out.uncertain.emplace_back(l, r);
      return;
    }
    const double m = 0.5 * (l + r);
    const double fm = e(m);
    run(l, m, fl, fm, depth + 1);
    run(m, r, fm, fr, depth + 1);
  }
};

}  // namespace

RootScan scan_roots(const Expr& e, double u, double v, int max_depth) {
  if (e.is_constant()) return {};
  const Expr d = e.derivative();
  RootSearch s{e, d, max_depth, 200000, {}};
  s.run(u, v, e(u), e(v), 0);
  auto& roots = s.out.roots;
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  // Merge adjacent uncertain cells.
  auto& unc = s.out.uncertain;
  std::sort(unc.begin(), unc.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& c : unc) {
    if (!merged.empty() && merged.back().second >= c.first) {
      merged.back().second = std::max(merged.back().second, c.second);
    } else {
      merged.push_back(c);
    }
  }
  unc = std::move(merged);
  return s.out;
}

std::vector<double> isolate_roots(const Expr& e, double u, double v, int max_depth) {
  RootScan s = scan_roots(e, u, v, max_depth);
  std::vector<double> out = s.roots;
  for (const auto& [l, r] : s.uncertain) out.push_back(0.5 * (l + r));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace saltus
