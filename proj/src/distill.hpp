#pragma once

#include <cstdint>
#include <vector>

#include "matrix.hpp"
#include "model.hpp"

namespace tkd::distill {

// How per-teacher divergence terms combine into one regularizer.
enum class Aggregation { mean, max, sum };

const char* aggregation_name(Aggregation agg);
Aggregation aggregation_from_name(const std::string& name);

struct TkdLossConfig {
  double alpha = 0.5;       // weight on the hard-label term; 1 = plain CE
  int truncation_k = 0;     // earliest teacher period admitted
  Aggregation agg = Aggregation::mean;
  double clip_eps = 1e-12;  // probability clamp before logs

  void validate() const;
};

// Teacher outputs on one target period's inputs: probability rows, one per
// sample of the target slice.
struct SoftLabelMatrix {
  int teacher_period = -1;
  int target_period = -1;
  Matrix probs;  // n x 2

  void validate() const;
};

struct TeacherEntry {
  int period = -1;
  ModelPtr model;
};

// Historical models ordered by the period they were trained at. Strictly
// increasing periods, at most one model per period.
class TeacherRegistry {
 public:
  void add(int period, ModelPtr model);
  const std::vector<TeacherEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const TeacherEntry* find(int period) const;

 private:
  std::vector<TeacherEntry> entries_;
};

// Scores `x` (the period-t inputs) with every teacher from period
// truncation_k through t-1, in period order. Errors when no teacher
// qualifies or a teacher's feature width does not match.
std::vector<SoftLabelMatrix> generate_soft_labels(const TeacherRegistry& registry,
                                                  const Matrix& x, int target_period,
                                                  int truncation_k);

// Mean over samples of -log p(true class), probabilities clamped to
// [eps, 1-eps].
double cross_entropy(const std::vector<int>& labels, const Matrix& student, double clip_eps);

// Per-teacher KL(teacher || student), each a mean over samples of
// sum_c O_c * log(O_c / y_c).
std::vector<double> per_teacher_kl(const Matrix& student, const std::vector<SoftLabelMatrix>& soft,
                                   double clip_eps);

// Combines scalars per the aggregation choice. mean/sum add in sorted order
// so the result is exactly invariant to teacher permutation.
double aggregate(std::vector<double> values, Aggregation agg);

// alpha * CE + (1 - alpha) * AGG_i[ KL(O_i || y) ]. With alpha = 1 the
// teacher term is skipped entirely; an empty teacher list with alpha < 1 is
// a configuration error.
double tkd_loss(const std::vector<int>& labels, const Matrix& student,
                const std::vector<SoftLabelMatrix>& soft, const TkdLossConfig& cfg);

// CE + (1/(t-K)) * sum_i KL: the equal-weight special case written without
// the halving, i.e. exactly twice tkd_loss at alpha = 0.5 with mean
// aggregation. Requires one teacher per period K..t-1.
double simplified_loss(const std::vector<int>& labels, const Matrix& student,
                       const std::vector<SoftLabelMatrix>& soft, int truncation_k,
                       int target_period);

// Analytic gradient of tkd_loss with respect to the student probability
// entries (same shape as `student`). Assumes no clamp is active at the
// evaluation point.
Matrix loss_grad_wrt_probs(const std::vector<int>& labels, const Matrix& student,
                           const std::vector<SoftLabelMatrix>& soft, const TkdLossConfig& cfg);

// Per-teacher weights for gradient composition: mean -> 1/T each, sum -> 1
// each, max -> 1 on the argmax-KL teacher (ties to the earliest) and 0
// elsewhere.
std::vector<double> teacher_gradient_weights(const Matrix& student,
                                             const std::vector<SoftLabelMatrix>& soft,
                                             const TkdLossConfig& cfg);

}  // namespace tkd::distill
