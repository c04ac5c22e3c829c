#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "mpr/core.hpp"

namespace mpr {

/// Parametric generator over the joint attribute cells of a schema: a
/// categorical distribution softmax(logits), with the initial logits kept
/// frozen for the drift regularizer.
class GeneratorModel {
 public:
  GeneratorModel(AttributeSchema schema, std::vector<double> logits);
  static GeneratorModel from_distribution(const AttributeSchema& schema,
                                          const std::vector<double>& probs);

  const AttributeSchema& schema() const { return schema_; }
  const std::vector<double>& logits() const { return logits_; }
  const std::vector<double>& base_logits() const { return base_logits_; }
  std::vector<double> probabilities() const;
  std::vector<double> base_probabilities() const;

  // Training updates move the live logits; the base stays frozen.
  void set_logits(std::vector<double> logits);

  SampleSet sample(long long n, std::uint64_t seed, std::string label = "generated") const;

 private:
  AttributeSchema schema_;
  std::vector<double> logits_;
  std::vector<double> base_logits_;
};

SampleSet sample_batch(const GeneratorModel& gen, long long batch, std::uint64_t seed);

// Fixed-capacity FIFO of generated feature vectors; eviction strictly
// oldest-first.
class SampleBuffer {
 public:
  explicit SampleBuffer(std::size_t capacity);
  void extend(const SampleSet& batch);
  std::size_t evict_to_capacity();  // returns how many rows were popped
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t pushed_total() const { return pushed_; }
  std::uint64_t oldest_sequence() const { return pushed_ - entries_.size(); }
  SampleSet as_sample_set(const AttributeSchema& schema, std::string label) const;

 private:
  std::size_t capacity_;
  std::deque<std::vector<double>> entries_;
  std::uint64_t pushed_ = 0;
};

// Fixed-capacity FIFO of witness functions.
class FunctionBuffer {
 public:
  explicit FunctionBuffer(std::size_t capacity);
  void append(Witness witness);
  std::size_t evict_to_capacity();
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t pushed_total() const { return pushed_; }
  const std::deque<Witness>& entries() const { return entries_; }
  std::vector<Witness> snapshot() const;

 private:
  std::size_t capacity_;
  std::deque<Witness> entries_;
  std::uint64_t pushed_ = 0;
};

// Sum over buffered witnesses of |mean over generated samples - reference
// mean|; reference means are exact when the reference is exactly known.
double loss_mpr(const SampleSet& generated, std::span<const Witness> functions,
                const ReferenceSpec& reference);

// Total variation between the current and the base cell distributions.
double loss_drift(const GeneratorModel& gen);

// The differentiable training objective: the generated-side witness means
// are taken in expectation under softmax(logits), plus reg_lambda times the
// drift term. A positive kink_smoothing replaces each absolute value by its
// Huber envelope of that width (exact outside the band); 0 is the exact
// objective.
double objective_value(const GeneratorModel& gen, std::span<const Witness> functions,
                       const ReferenceSpec& reference, double reg_lambda,
                       double kink_smoothing = 0.0);

// Analytic gradient of objective_value in the logits; with zero smoothing
// the subgradient is 0 at the absolute-value and total-variation kinks.
std::vector<double> grad_loss(const GeneratorModel& gen, std::span<const Witness> functions,
                              const ReferenceSpec& reference, double reg_lambda,
                              double kink_smoothing = 0.0);

struct TuneConfig {
  long long iterations = 2000;
  int batch_size = 8;
  double learning_rate = 0.1;
  double reg_lambda = 0.5;
  std::size_t buffer_samples = 32;    // generated-sample FIFO capacity
  std::size_t buffer_functions = 32;  // witness FIFO capacity
  double grad_clip_norm = 1.0;
  // Huber band for the training steps; keeps the witness forces proportional
  // near their kinks so the iterate can slide along the matched manifold
  // instead of chattering across it.
  double kink_smoothing = 0.05;
  long long eval_every = 100;
  long long eval_samples = 4000;
  std::uint64_t seed = 0;
  FunctionClassSpec function_class = DecisionTree{1};
  bool dedup_witnesses = false;
};

struct TuneRecord {
  long long iteration = 0;  // 1-based, recorded after the update
  double mpr_value = 0.0;   // fresh-sample checkpoint estimate
  double loss_mpr = 0.0;    // buffered sample-based term
  double loss_drift = 0.0;
  std::string witness_summary;
};

struct TuneTrajectory {
  std::vector<TuneRecord> records;
  GeneratorModel final_model;
};

// Buffered fine-tuning: per iteration, sample a batch, refresh the FIFO
// buffers, recompute the maximizer witness on the buffered samples, and take
// a clipped gradient step on the expectation-form objective (halving the
// step, at most 20 times, whenever it would increase the objective by more
// than 1e-3). Fully deterministic per seed.
TuneTrajectory finetune(const GeneratorModel& init, const ReferenceSpec& reference,
                        const TuneConfig& cfg);

// Fresh-sample metric estimate at a checkpoint, independent of the buffers.
MprEstimate evaluate_checkpoint(const GeneratorModel& gen, const ReferenceSpec& reference,
                                const FunctionClassSpec& spec, long long n_samples,
                                std::uint64_t seed);

}  // namespace mpr
