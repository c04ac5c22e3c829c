#include "mpr/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "mpr/rng.hpp"

namespace mpr {

namespace {

constexpr long long kMaxGradientCells = 100'000;

std::vector<double> softmax(const std::vector<double>& logits) {
  double peak = logits[0];
  for (double l : logits) peak = std::max(peak, l);
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    p[j] = std::exp(logits[j] - peak);
    sum += p[j];
  }
  for (double& v : p) v /= sum;
  return p;
}

double reference_mean(const Witness& w, const ReferenceSpec& reference) {
  if (reference.is_exact()) {
    const ExactDistribution& d = *reference.exact();
    double mean = 0.0;
    for (long long cell = 0; cell < d.cell_count(); ++cell) {
      if (d.prob(cell) == 0.0) continue;
      mean += d.prob(cell) * evaluate(w, d.schema().encode_cell(cell));
    }
    return mean;
  }
  const SampleSet& s = *reference.samples();
  double mean = 0.0;
  for (long long i = 0; i < s.size(); ++i) mean += s.weight(i) * evaluate(w, s.row(i));
  return mean;
}

// Witness values tabulated over the generator's joint cells plus the fixed
// reference mean; cached once per buffered witness.
struct CachedWitness {
  std::vector<double> cell_values;
  double ref_mean = 0.0;
};

CachedWitness cache_witness(const Witness& w,
                            const std::vector<std::vector<double>>& encoded_cells,
                            const ReferenceSpec& reference) {
  CachedWitness cached;
  cached.cell_values.resize(encoded_cells.size());
  for (std::size_t cell = 0; cell < encoded_cells.size(); ++cell)
    cached.cell_values[cell] = evaluate(w, encoded_cells[cell]);
  cached.ref_mean = reference_mean(w, reference);
  return cached;
}

// Huber envelope of |x|: quadratic inside the band, exact outside. Band 0
// recovers the absolute value with subgradient 0 at the kink.
double huber(double x, double band) {
  const double a = std::abs(x);
  if (band <= 0.0 || a >= band) return a;
  return x * x / (2.0 * band) + band / 2.0;
}

double huber_slope(double x, double band) {
  if (band <= 0.0 || std::abs(x) >= band) return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
  return x / band;
}

double objective_from_cache(const std::vector<double>& probs,
                            const std::vector<double>& base_probs,
                            std::span<const CachedWitness> cache, double reg_lambda,
                            double band) {
  double obj = 0.0;
  for (const auto& cw : cache) {
    double mean = 0.0;
    for (std::size_t j = 0; j < probs.size(); ++j) mean += probs[j] * cw.cell_values[j];
    obj += huber(mean - cw.ref_mean, band);
  }
  double tv = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j)
    tv += huber(probs[j] - base_probs[j], band);
  return obj + reg_lambda * 0.5 * tv;
}

std::vector<double> gradient_from_cache(const std::vector<double>& probs,
                                        const std::vector<double>& base_probs,
                                        std::span<const CachedWitness> cache,
                                        double reg_lambda, double band) {
  const std::size_t cells = probs.size();
  std::vector<double> grad(cells, 0.0);
  for (const auto& cw : cache) {
    double mean = 0.0;
    for (std::size_t j = 0; j < cells; ++j) mean += probs[j] * cw.cell_values[j];
    const double slope = huber_slope(mean - cw.ref_mean, band);
    if (slope == 0.0) continue;
    // d/d_logit_j of E_p[c] = p_j (c_j - E_p[c])
    for (std::size_t j = 0; j < cells; ++j)
      grad[j] += slope * probs[j] * (cw.cell_values[j] - mean);
  }
  if (reg_lambda != 0.0) {
    double expected_slope = 0.0;
    std::vector<double> drift_slope(cells);
    for (std::size_t j = 0; j < cells; ++j) {
      drift_slope[j] = huber_slope(probs[j] - base_probs[j], band);
      expected_slope += probs[j] * drift_slope[j];
    }
    for (std::size_t j = 0; j < cells; ++j)
      grad[j] += reg_lambda * 0.5 * probs[j] * (drift_slope[j] - expected_slope);
  }
  return grad;
}

std::vector<std::vector<double>> encode_all_cells(const AttributeSchema& schema) {
  const long long cells = schema.joint_cell_count();
  if (cells > kMaxGradientCells)
    throw guard_error("generator over " + std::to_string(cells) +
                      " joint cells exceeds the gradient limit");
  std::vector<std::vector<double>> encoded(cells);
  for (long long cell = 0; cell < cells; ++cell) encoded[cell] = schema.encode_cell(cell);
  return encoded;
}

std::string witness_identity(const Witness& w) {
  if (const auto* lin = std::get_if<LinearWitness>(&w)) {
    std::string id = "L";
    for (double v : lin->w) id += ":" + std::to_string(v);
    return id;
  }
  if (const auto* tree = std::get_if<TreeWitness>(&w)) {
    std::string id = "T";
    for (int f : tree->features) id += ":" + std::to_string(f);
    id += "/";
    for (std::int8_t s : tree->leaf_signs) id += s > 0 ? '1' : '0';
    return id;
  }
  return "I:" + std::to_string(std::get<IndicatorWitness>(w).index);
}

}  // namespace

GeneratorModel::GeneratorModel(AttributeSchema schema, std::vector<double> logits)
    : schema_(std::move(schema)), logits_(std::move(logits)), base_logits_(logits_) {
  if (static_cast<long long>(logits_.size()) != schema_.joint_cell_count())
    throw input_error("generator needs one logit per joint cell (" +
                      std::to_string(schema_.joint_cell_count()) + ")");
}

GeneratorModel GeneratorModel::from_distribution(const AttributeSchema& schema,
                                                 const std::vector<double>& probs) {
  if (static_cast<long long>(probs.size()) != schema.joint_cell_count())
    throw input_error("generator needs one probability per joint cell");
  double sum = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw input_error("generator probabilities must be nonnegative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw input_error("generator probabilities sum to " + std::to_string(sum));
  std::vector<double> logits(probs.size());
  for (std::size_t j = 0; j < probs.size(); ++j)
    logits[j] = std::log(std::max(probs[j] / sum, 1e-300));
  return GeneratorModel(schema, std::move(logits));
}

std::vector<double> GeneratorModel::probabilities() const { return softmax(logits_); }
std::vector<double> GeneratorModel::base_probabilities() const {
  return softmax(base_logits_);
}

void GeneratorModel::set_logits(std::vector<double> logits) {
  if (logits.size() != logits_.size()) throw input_error("logit dimension mismatch");
  logits_ = std::move(logits);
}

SampleSet GeneratorModel::sample(long long n, std::uint64_t seed, std::string label) const {
  if (n < 1) throw input_error("sample count must be >= 1");
  const auto probs = probabilities();
  std::vector<double> cdf(probs.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    acc += probs[j];
    cdf[j] = acc;
  }
  Rng rng(seed);
  std::vector<std::vector<double>> rows;
  rows.reserve(n);
  for (long long i = 0; i < n; ++i)
    rows.push_back(schema_.encode_cell(static_cast<long long>(rng.categorical(cdf))));
  return SampleSet::from_encoded(schema_, rows, std::move(label));
}

SampleSet sample_batch(const GeneratorModel& gen, long long batch, std::uint64_t seed) {
  return gen.sample(batch, seed);
}

SampleBuffer::SampleBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity < 1) throw input_error("buffer capacity must be >= 1");
}

void SampleBuffer::extend(const SampleSet& batch) {
  for (long long i = 0; i < batch.size(); ++i) {
    const auto row = batch.row(i);
    entries_.emplace_back(row.begin(), row.end());
    ++pushed_;
  }
}

std::size_t SampleBuffer::evict_to_capacity() {
  std::size_t evicted = 0;
  while (entries_.size() > capacity_) {
    entries_.pop_front();
    ++evicted;
  }
  return evicted;
}

SampleSet SampleBuffer::as_sample_set(const AttributeSchema& schema,
                                      std::string label) const {
  if (entries_.empty()) throw input_error("sample buffer is empty");
  std::vector<std::vector<double>> rows(entries_.begin(), entries_.end());
  return SampleSet::from_encoded(schema, rows, std::move(label));
}

FunctionBuffer::FunctionBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity < 1) throw input_error("buffer capacity must be >= 1");
}

void FunctionBuffer::append(Witness witness) {
  entries_.push_back(std::move(witness));
  ++pushed_;
}

std::size_t FunctionBuffer::evict_to_capacity() {
  std::size_t evicted = 0;
  while (entries_.size() > capacity_) {
    entries_.pop_front();
    ++evicted;
  }
  return evicted;
}

std::vector<Witness> FunctionBuffer::snapshot() const {
  return {entries_.begin(), entries_.end()};
}

double loss_mpr(const SampleSet& generated, std::span<const Witness> functions,
                const ReferenceSpec& reference) {
  if (functions.empty()) throw input_error("function buffer is empty");
  double loss = 0.0;
  for (const auto& w : functions) {
    double gen_mean = 0.0;
    for (long long i = 0; i < generated.size(); ++i)
      gen_mean += generated.weight(i) * evaluate(w, generated.row(i));
    loss += std::abs(gen_mean - reference_mean(w, reference));
  }
  return loss;
}

double loss_drift(const GeneratorModel& gen) {
  const auto p = gen.probabilities();
  const auto q = gen.base_probabilities();
  double l1 = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) l1 += std::abs(p[j] - q[j]);
  return 0.5 * l1;
}

double objective_value(const GeneratorModel& gen, std::span<const Witness> functions,
                       const ReferenceSpec& reference, double reg_lambda,
                       double kink_smoothing) {
  if (functions.empty()) throw input_error("function buffer is empty");
  const auto encoded = encode_all_cells(gen.schema());
  std::vector<CachedWitness> cache;
  cache.reserve(functions.size());
  for (const auto& w : functions)
    cache.push_back(cache_witness(w, encoded, reference));
  return objective_from_cache(gen.probabilities(), gen.base_probabilities(), cache,
                              reg_lambda, kink_smoothing);
}

std::vector<double> grad_loss(const GeneratorModel& gen, std::span<const Witness> functions,
                              const ReferenceSpec& reference, double reg_lambda,
                              double kink_smoothing) {
  if (functions.empty()) throw input_error("function buffer is empty");
  const auto encoded = encode_all_cells(gen.schema());
  std::vector<CachedWitness> cache;
  cache.reserve(functions.size());
  for (const auto& w : functions)
    cache.push_back(cache_witness(w, encoded, reference));
  return gradient_from_cache(gen.probabilities(), gen.base_probabilities(), cache,
                             reg_lambda, kink_smoothing);
}

TuneTrajectory finetune(const GeneratorModel& init, const ReferenceSpec& reference,
                        const TuneConfig& cfg) {
  if (cfg.iterations < 1) throw input_error("iterations must be >= 1");
  if (cfg.batch_size < 1) throw input_error("batch size must be >= 1");
  if (cfg.learning_rate <= 0.0) throw input_error("learning rate must be positive");
  if (cfg.reg_lambda < 0.0) throw input_error("reg lambda must be nonnegative");
  if (cfg.grad_clip_norm <= 0.0) throw input_error("grad clip norm must be positive");
  if (cfg.kink_smoothing < 0.0) throw input_error("kink smoothing must be nonnegative");
  if (cfg.eval_every < 1 || cfg.eval_every > cfg.iterations)
    throw input_error("eval_every must be in [1, iterations]");
  if (cfg.eval_samples < 1) throw input_error("eval_samples must be >= 1");
  validate(cfg.function_class, init.schema().feature_dim());

  GeneratorModel model = init;
  const auto encoded = encode_all_cells(model.schema());
  const auto base_probs = model.base_probabilities();

  SampleBuffer samples(cfg.buffer_samples);
  FunctionBuffer functions(cfg.buffer_functions);
  std::vector<CachedWitness> cache;

  TuneTrajectory traj{{}, model};
  for (long long t = 0; t < cfg.iterations; ++t) {
    const SampleSet batch =
        model.sample(cfg.batch_size, derive_seed(cfg.seed, "tune/batch", t));
    samples.extend(batch);
    samples.evict_to_capacity();
    const SampleSet buffered = samples.as_sample_set(model.schema(), "buffered");

    const MprEstimate maximizer = compute_mpr(cfg.function_class, buffered, reference);
    bool duplicate = false;
    if (cfg.dedup_witnesses) {
      const std::string id = witness_identity(maximizer.witness);
      for (const auto& w : functions.entries())
        if (witness_identity(w) == id) duplicate = true;
    }
    if (!duplicate) {
      functions.append(maximizer.witness);
      cache.push_back(
          cache_witness(maximizer.witness, encoded, reference));
      if (functions.evict_to_capacity() > 0) cache.erase(cache.begin());
    }

    auto probs = model.probabilities();
    const double obj_before = objective_from_cache(probs, base_probs, cache,
                                                   cfg.reg_lambda, cfg.kink_smoothing);
    auto grad = gradient_from_cache(probs, base_probs, cache, cfg.reg_lambda,
                                    cfg.kink_smoothing);
    double norm2 = 0.0;
    for (double gv : grad) norm2 += gv * gv;
    const double norm = std::sqrt(norm2);
    if (norm > cfg.grad_clip_norm)
      for (double& gv : grad) gv *= cfg.grad_clip_norm / norm;

    double step = cfg.learning_rate;
    std::vector<double> proposed(model.logits().size());
    bool accepted = false;
    for (int attempt = 0; attempt <= 20 && !accepted; ++attempt) {
      for (std::size_t j = 0; j < proposed.size(); ++j)
        proposed[j] = model.logits()[j] - step * grad[j];
      const double obj_after = objective_from_cache(softmax(proposed), base_probs, cache,
                                                    cfg.reg_lambda, cfg.kink_smoothing);
      accepted = obj_after <= obj_before + 1e-3;
      if (!accepted) step *= 0.5;
    }
    if (!accepted) {
      // no step length decreased the surrogate; take the plain update and let
      // buffer turnover move the iterate
      for (std::size_t j = 0; j < proposed.size(); ++j)
        proposed[j] = model.logits()[j] - cfg.learning_rate * grad[j];
    }
    model.set_logits(proposed);

    if ((t + 1) % cfg.eval_every == 0 || t + 1 == cfg.iterations) {
      const MprEstimate eval =
          evaluate_checkpoint(model, reference, cfg.function_class, cfg.eval_samples,
                              derive_seed(cfg.seed, "tune/eval", t));
      TuneRecord rec;
      rec.iteration = t + 1;
      rec.mpr_value = eval.value;
      rec.loss_mpr = loss_mpr(buffered, functions.snapshot(), reference);
      rec.loss_drift = loss_drift(model);
      rec.witness_summary = witness_summary(maximizer.witness, &model.schema());
      traj.records.push_back(std::move(rec));
    }
  }
  traj.final_model = model;
  return traj;
}

MprEstimate evaluate_checkpoint(const GeneratorModel& gen, const ReferenceSpec& reference,
                                const FunctionClassSpec& spec, long long n_samples,
                                std::uint64_t seed) {
  return compute_mpr(spec, gen.sample(n_samples, seed, "checkpoint"), reference);
}

}  // namespace mpr
