#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "quorum/types.hpp"

namespace quorum {

// Recorded per-query, per-model binary responses with ground truth.
struct ResponseMatrix {
    struct Row {
        std::string query_id;
        int true_label = 0;              // +1 or -1
        std::vector<int> responses;      // one +1/-1 per model
    };
    std::vector<std::string> model_names;
    std::vector<Row> rows;

    std::size_t model_count() const { return model_names.size(); }
};

class MatrixParseError : public std::runtime_error {
public:
    MatrixParseError(std::size_t row, const std::string& what)
        : std::runtime_error("row " + std::to_string(row) + ": " + what), row_(row) {}
    std::size_t row() const { return row_; }

private:
    std::size_t row_;
};

// CSV with header `query_id,true_label,<model_1>,...,<model_M>`; labels are
// true/false or 1/-1. Ragged rows, unknown labels and duplicate query ids
// raise MatrixParseError carrying the 1-based data row number.
ResponseMatrix load_matrix(std::istream& in);
ResponseMatrix load_matrix_file(const std::string& path);

// Fraction of rows each model answers correctly.
std::vector<double> per_model_accuracy(const ResponseMatrix& matrix);

// Majority-style accuracy of one model subset: per row, count +1 votes among
// the subset and decide with the MAP rule at p = the subset's mean empirical
// accuracy. prior_w = 0.5 reduces to a simple majority vote with ties -> +1.
double subset_joint_accuracy(const ResponseMatrix& matrix, const std::vector<std::size_t>& subset,
                             double prior_w);

struct EnsembleCurvePoint {
    int m = 0;
    double mean_accuracy = 0.0;
    double min_accuracy = 0.0;
    double max_accuracy = 0.0;
    std::uint64_t n_subsets = 0;
};
using EnsembleCurve = std::vector<EnsembleCurvePoint>;

// Mean/min/max subset accuracy over all C(M, m) subsets for m = 1..M. Equals
// the average over all M! orderings' growing prefixes because the vote is
// order-invariant and every size-m subset prefixes equally many orderings.
// Refuses M > 20.
EnsembleCurve permutation_average_curve(const ResponseMatrix& matrix, double prior_w);

struct BoundsPoint {
    int m = 0;
    double lower = 0.0;          // joint accuracy at the weakest model's p
    double upper = 0.0;          // at the strongest model's p
    double mean_p_theory = 0.0;  // at the mean per-model p
};

std::vector<BoundsPoint> bounds_curve(const ResponseMatrix& matrix, double prior_w);

// Independent Bernoulli responses at the given per-model accuracies; truths
// drawn with prior prior_w. Deterministic given seed.
ResponseMatrix make_synthetic_matrix(const std::vector<double>& model_ps, double prior_w,
                                     std::size_t rows, std::uint64_t seed);

void write_curve_csv(std::ostream& out, const EnsembleCurve& curve);
void write_bounds_csv(std::ostream& out, const std::vector<BoundsPoint>& bounds);
void write_matrix_csv(std::ostream& out, const ResponseMatrix& matrix);

}  // namespace quorum
