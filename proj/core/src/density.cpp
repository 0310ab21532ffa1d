#include "seriate/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "seriate/state.hpp"

namespace seriate {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(std::span<const double> logs) {
  double m = kNegInf;
  for (double v : logs) m = std::max(m, v);
  if (std::isinf(m) && m < 0) return kNegInf;
  double acc = 0.0;
  for (double v : logs) acc += std::exp(v - m);
  return m + std::log(acc);
}

}  // namespace

std::string TabularSeqModel::key_of(std::span<const LexiconElement> elements) {
  std::string key;
  ByteWriter w(key);
  for (const auto& e : elements) {
    w.u32(e.symbol);
    w.u8(e.value ? 1 : 0);
    if (e.value) w.f64_bits(*e.value);
  }
  return key;
}

void TabularSeqModel::add_mass(const Serialization& a, double mass) {
  if (!(mass >= 0.0) || !std::isfinite(mass))
    throw Error("tabular model mass must be finite and nonnegative");
  auto [it, fresh] = masses_.try_emplace(key_of(a.elements), a, 0.0);
  it->second.second += mass;
}

double TabularSeqModel::log_prob(const Serialization& a) const {
  const auto it = masses_.find(key_of(a.elements));
  if (it == masses_.end() || it->second.second <= 0.0) return kNegInf;
  return std::log(it->second.second);
}

double TabularSeqModel::total_mass() const {
  double total = 0.0;
  for (const auto& [key, entry] : masses_) total += entry.second;
  return total;
}

double TabularSeqModel::prefix_mass(std::span<const LexiconElement> prefix) const {
  const std::string prefix_key = key_of(prefix);
  double total = 0.0;
  for (auto it = masses_.lower_bound(prefix_key);
       it != masses_.end() && it->first.compare(0, prefix_key.size(), prefix_key) == 0;
       ++it)
    total += it->second.second;
  return total;
}

std::vector<std::pair<LexiconElement, double>> TabularSeqModel::next_distribution(
    std::span<const LexiconElement> prefix) const {
  const double denom = prefix_mass(prefix);
  if (denom <= 0.0) throw Error("prefix is outside the tabular model support");

  std::map<std::string, std::pair<LexiconElement, double>> by_next;
  const std::string prefix_key = key_of(prefix);
  for (auto it = masses_.lower_bound(prefix_key);
       it != masses_.end() && it->first.compare(0, prefix_key.size(), prefix_key) == 0;
       ++it) {
    const auto& elements = it->second.first.elements;
    if (elements.size() <= prefix.size()) continue;
    const LexiconElement& next = elements[prefix.size()];
    const std::string next_key = key_of(std::span(&next, 1));
    auto [slot, fresh] = by_next.try_emplace(next_key, next, 0.0);
    slot->second.second += it->second.second;
  }

  std::vector<std::pair<LexiconElement, double>> out;
  out.reserve(by_next.size());
  for (const auto& [key, entry] : by_next)
    out.emplace_back(entry.first, entry.second / denom);
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

std::vector<std::pair<Serialization, double>> TabularSeqModel::sequences() const {
  std::vector<std::pair<Serialization, double>> out;
  out.reserve(masses_.size());
  for (const auto& [key, entry] : masses_) out.push_back(entry);
  return out;
}

TabularSeqModel build_tabular_oracle(const StructureBackend& backend,
                                     const Dataset& dataset, const SamplerConfig& cfg,
                                     std::uint64_t bound) {
  if (dataset.empty()) throw Error("cannot build an oracle from an empty dataset");
  TabularSeqModel model;
  const double instance_mass = 1.0 / static_cast<double>(dataset.size());
  for (const auto& entry : dataset) {
    const auto fiber = backend.enumerate_serializations(entry.instance, bound);
    for (const auto& a : fiber) {
      const double log_q = path_log_prob(backend, entry.instance, a, cfg);
      model.add_mass(a, instance_mass * std::exp(log_q));
    }
  }
  return model;
}

double pushforward_prob(const StructureBackend& backend, const StructureInstance& x,
                        const SequenceModel& model, std::uint64_t bound) {
  const auto fiber = backend.enumerate_serializations(x, bound);
  std::vector<double> logs;
  logs.reserve(fiber.size());
  for (const auto& a : fiber) logs.push_back(model.log_prob(a));
  const double log_total = log_sum_exp(logs);
  return std::isinf(log_total) && log_total < 0 ? 0.0 : std::exp(log_total);
}

double property_normalizer(const StructureBackend& backend, const StructureInstance& x,
                           const Serialization& o, const SamplerConfig& cfg) {
  try {
    return std::exp(path_log_prob(backend, x, o, cfg));
  } catch (const NotASerializationOf& e) {
    throw UnrealizableProperty(e.what());
  }
}

double property_normalizer(const StructureBackend& backend, const StructureInstance& x,
                           std::uint64_t o, const PropertyView& view,
                           const SamplerConfig& cfg, std::uint64_t bound) {
  if (view.mode == PropertyView::Mode::Singleton)
    throw Error("singleton properties are keyed by their serialization");
  if (view.exact_normalizer) return view.exact_normalizer(x, o);
  if (!view.property_of) throw Error("custom property view needs a property function");

  const auto fiber = backend.enumerate_serializations(x, bound);
  std::vector<double> logs;
  for (const auto& a : fiber)
    if (view.property_of(a) == o) logs.push_back(path_log_prob(backend, x, a, cfg));
  if (logs.empty())
    throw UnrealizableProperty("no serialization of the instance bears the property");
  return std::exp(log_sum_exp(logs));
}

double frac_prob(const StructureBackend& backend, const StructureInstance& x,
                 const Serialization& o, const SequenceModel& model,
                 const SamplerConfig& cfg) {
  const double normalizer = property_normalizer(backend, x, o, cfg);
  if (normalizer <= 0.0)
    throw DivisionUndefined("P(o|x) is zero for the requested property");
  return std::exp(model.log_prob(o)) / normalizer;
}

double frac_prob(const StructureBackend& backend, const StructureInstance& x,
                 std::uint64_t o, const PropertyView& view, const SequenceModel& model,
                 const SamplerConfig& cfg, std::uint64_t bound) {
  const double normalizer = property_normalizer(backend, x, o, view, cfg, bound);
  if (normalizer <= 0.0)
    throw DivisionUndefined("P(o|x) is zero for the requested property");
  const auto fiber = backend.enumerate_serializations(x, bound);
  std::vector<double> logs;
  for (const auto& a : fiber)
    if (view.property_of(a) == o) logs.push_back(model.log_prob(a));
  const double log_mass = log_sum_exp(logs);
  const double mass = std::isinf(log_mass) && log_mass < 0 ? 0.0 : std::exp(log_mass);
  return mass / normalizer;
}

RecoveryEstimate recover_density(const StructureBackend& backend,
                                 const StructureInstance& x, const SequenceModel& model,
                                 std::size_t m, const SamplerConfig& cfg, Philox& rng) {
  if (m < 1) throw Error("recovery needs at least one draw");
  std::vector<double> ratios;
  ratios.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    const Serialization a = sample_serialization(backend, x, cfg, rng);
    const double log_q = a.path_log_prob();
    const double log_p = model.log_prob(a);
    ratios.push_back(std::isinf(log_p) && log_p < 0 ? 0.0 : std::exp(log_p - log_q));
  }
  RecoveryEstimate est;
  est.draws = m;
  double sum = 0.0;
  for (double r : ratios) sum += r;
  est.estimate = sum / static_cast<double>(m);
  if (m > 1) {
    double ss = 0.0;
    for (double r : ratios) ss += (r - est.estimate) * (r - est.estimate);
    est.stderr_ = std::sqrt(ss / (static_cast<double>(m) * (static_cast<double>(m) - 1)));
  }
  return est;
}

}  // namespace seriate
