#include "quorum/response_analysis.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "quorum/ensemble_math.hpp"
#include "quorum/rng.hpp"

namespace quorum {

namespace {

constexpr std::size_t kMaxModels = 20;

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

int parse_label(const std::string& raw, std::size_t line_no) {
    std::string s = raw;
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == "true" || s == "1") return +1;
    if (s == "false" || s == "-1") return -1;
    throw MatrixParseError(line_no, "unknown label '" + raw + "'");
}

// Bit j of a row mask is set when model j answered +1.
struct MaskedView {
    std::size_t n_models = 0;
    std::vector<std::uint32_t> votes;
    std::vector<int> truths;
};

MaskedView make_masked(const ResponseMatrix& matrix) {
    MaskedView view;
    view.n_models = matrix.model_count();
    view.votes.reserve(matrix.rows.size());
    view.truths.reserve(matrix.rows.size());
    for (const auto& row : matrix.rows) {
        std::uint32_t mask = 0;
        for (std::size_t j = 0; j < row.responses.size(); ++j)
            if (row.responses[j] == +1) mask |= (1u << j);
        view.votes.push_back(mask);
        view.truths.push_back(row.true_label);
    }
    return view;
}

// Mean of the subset models' individual accuracies, summed in ascending
// model order so every caller sees the identical double for a given subset.
double subset_mean_accuracy(const std::vector<double>& per_model, std::uint32_t subset_mask) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t j = 0; j < per_model.size(); ++j) {
        if (subset_mask & (1u << j)) {
            sum += per_model[j];
            ++count;
        }
    }
    return sum / count;
}

std::int64_t subset_correct_count(const MaskedView& view, std::uint32_t subset_mask, int m,
                                  double p_sub, double prior_w) {
    // Decisions depend on the vote count only; tabulate them once.
    std::vector<int> decision(static_cast<std::size_t>(m) + 1);
    for (int k = 0; k <= m; ++k) decision[static_cast<std::size_t>(k)] = map_decide(k, m, p_sub, prior_w);
    std::int64_t correct = 0;
    for (std::size_t r = 0; r < view.votes.size(); ++r) {
        const int k = std::popcount(view.votes[r] & subset_mask);
        if (decision[static_cast<std::size_t>(k)] == view.truths[r]) ++correct;
    }
    return correct;
}

}  // namespace

ResponseMatrix load_matrix(std::istream& in) {
    ResponseMatrix matrix;
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) throw MatrixParseError(1, "empty input, expected header");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "query_id" || header[1] != "true_label")
        throw MatrixParseError(1, "header must be query_id,true_label,<model names>");
    matrix.model_names.assign(header.begin() + 2, header.end());
    const std::size_t n_models = matrix.model_names.size();

    std::unordered_set<std::string> seen_ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != n_models + 2)
            throw MatrixParseError(line_no, "expected " + std::to_string(n_models + 2) +
                                                " cells, got " + std::to_string(cells.size()));
        ResponseMatrix::Row row;
        row.query_id = cells[0];
        if (!seen_ids.insert(row.query_id).second)
            throw MatrixParseError(line_no, "duplicate query_id '" + row.query_id + "'");
        row.true_label = parse_label(cells[1], line_no);
        row.responses.reserve(n_models);
        for (std::size_t j = 0; j < n_models; ++j)
            row.responses.push_back(parse_label(cells[j + 2], line_no));
        matrix.rows.push_back(std::move(row));
    }
    if (matrix.rows.empty()) throw MatrixParseError(line_no, "no data rows");
    return matrix;
}

ResponseMatrix load_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open matrix file: " + path);
    return load_matrix(in);
}

std::vector<double> per_model_accuracy(const ResponseMatrix& matrix) {
    const std::size_t n_models = matrix.model_count();
    std::vector<std::int64_t> correct(n_models, 0);
    for (const auto& row : matrix.rows)
        for (std::size_t j = 0; j < n_models; ++j)
            if (row.responses[j] == row.true_label) ++correct[j];
    std::vector<double> acc(n_models);
    for (std::size_t j = 0; j < n_models; ++j)
        acc[j] = static_cast<double>(correct[j]) / static_cast<double>(matrix.rows.size());
    return acc;
}

double subset_joint_accuracy(const ResponseMatrix& matrix, const std::vector<std::size_t>& subset,
                             double prior_w) {
    if (subset.empty()) throw std::invalid_argument("subset_joint_accuracy: empty subset");
    if (!(prior_w >= 0.0 && prior_w <= 1.0))
        throw std::invalid_argument("subset_joint_accuracy: prior_w must be in [0, 1]");
    std::uint32_t mask = 0;
    for (std::size_t j : subset) {
        if (j >= matrix.model_count())
            throw std::out_of_range("subset_joint_accuracy: model index out of range");
        mask |= (1u << j);
    }
    const auto view = make_masked(matrix);
    const auto acc = per_model_accuracy(matrix);
    const int m = std::popcount(mask);
    const double p_sub = subset_mean_accuracy(acc, mask);
    const std::int64_t correct = subset_correct_count(view, mask, m, p_sub, prior_w);
    return static_cast<double>(correct) / static_cast<double>(matrix.rows.size());
}

EnsembleCurve permutation_average_curve(const ResponseMatrix& matrix, double prior_w) {
    const std::size_t n_models = matrix.model_count();
    if (n_models > kMaxModels)
        throw std::invalid_argument("permutation_average_curve: more than " +
                                    std::to_string(kMaxModels) + " models");
    if (matrix.rows.empty()) throw std::invalid_argument("permutation_average_curve: no rows");

    const auto view = make_masked(matrix);
    const auto acc = per_model_accuracy(matrix);
    const std::int64_t rows = static_cast<std::int64_t>(matrix.rows.size());

    struct Accumulator {
        std::int64_t sum = 0;
        std::int64_t min = std::numeric_limits<std::int64_t>::max();
        std::int64_t max = std::numeric_limits<std::int64_t>::min();
        std::uint64_t subsets = 0;
    };
    std::vector<Accumulator> per_m(n_models + 1);

    const std::uint32_t all = n_models == 32 ? 0xFFFFFFFFu : ((1u << n_models) - 1u);
    for (std::uint32_t mask = 1; mask <= all; ++mask) {
        const int m = std::popcount(mask);
        const double p_sub = subset_mean_accuracy(acc, mask);
        const std::int64_t correct = subset_correct_count(view, mask, m, p_sub, prior_w);
        auto& a = per_m[static_cast<std::size_t>(m)];
        a.sum += correct;
        a.min = std::min(a.min, correct);
        a.max = std::max(a.max, correct);
        a.subsets += 1;
    }

    EnsembleCurve curve;
    curve.reserve(n_models);
    for (std::size_t m = 1; m <= n_models; ++m) {
        const auto& a = per_m[m];
        EnsembleCurvePoint point;
        point.m = static_cast<int>(m);
        point.n_subsets = a.subsets;
        // Single division of exact integer totals: the subset average is then
        // bit-identical to the average over all orderings' prefixes.
        point.mean_accuracy = static_cast<double>(a.sum) /
                              (static_cast<double>(a.subsets) * static_cast<double>(rows));
        point.min_accuracy = static_cast<double>(a.min) / static_cast<double>(rows);
        point.max_accuracy = static_cast<double>(a.max) / static_cast<double>(rows);
        curve.push_back(point);
    }
    return curve;
}

std::vector<BoundsPoint> bounds_curve(const ResponseMatrix& matrix, double prior_w) {
    const auto acc = per_model_accuracy(matrix);
    const double p_min = *std::min_element(acc.begin(), acc.end());
    const double p_max = *std::max_element(acc.begin(), acc.end());
    double p_avg = 0.0;
    for (double a : acc) p_avg += a;
    p_avg /= static_cast<double>(acc.size());

    std::vector<BoundsPoint> bounds;
    bounds.reserve(acc.size());
    for (int m = 1; m <= static_cast<int>(acc.size()); ++m) {
        BoundsPoint point;
        point.m = m;
        point.lower = joint_accuracy_exact(m, p_min, prior_w);
        point.upper = joint_accuracy_exact(m, p_max, prior_w);
        point.mean_p_theory = joint_accuracy_exact(m, p_avg, prior_w);
        bounds.push_back(point);
    }
    return bounds;
}

ResponseMatrix make_synthetic_matrix(const std::vector<double>& model_ps, double prior_w,
                                     std::size_t rows, std::uint64_t seed) {
    if (model_ps.empty()) throw std::invalid_argument("make_synthetic_matrix: no models");
    if (model_ps.size() > kMaxModels)
        throw std::invalid_argument("make_synthetic_matrix: too many models");
    ResponseMatrix matrix;
    for (std::size_t j = 0; j < model_ps.size(); ++j)
        matrix.model_names.push_back("model_" + std::to_string(j + 1));
    SplitMix64 rng(derive_stream_seed(seed, 0x53594E54ull, 0));
    matrix.rows.reserve(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        ResponseMatrix::Row row;
        row.query_id = "q" + std::to_string(r + 1);
        row.true_label = rng.bernoulli(prior_w) ? +1 : -1;
        row.responses.reserve(model_ps.size());
        for (double p : model_ps)
            row.responses.push_back(rng.bernoulli(p) ? row.true_label : -row.true_label);
        matrix.rows.push_back(std::move(row));
    }
    return matrix;
}

void write_curve_csv(std::ostream& out, const EnsembleCurve& curve) {
    out << "m,mean,min,max,n_subsets\n";
    out.precision(17);
    for (const auto& point : curve)
        out << point.m << ',' << point.mean_accuracy << ',' << point.min_accuracy << ','
            << point.max_accuracy << ',' << point.n_subsets << '\n';
}

void write_bounds_csv(std::ostream& out, const std::vector<BoundsPoint>& bounds) {
    out << "m,lower,upper,mean_p_theory\n";
    out.precision(17);
    for (const auto& point : bounds)
        out << point.m << ',' << point.lower << ',' << point.upper << ','
            << point.mean_p_theory << '\n';
}

void write_matrix_csv(std::ostream& out, const ResponseMatrix& matrix) {
    out << "query_id,true_label";
    for (const auto& name : matrix.model_names) out << ',' << name;
    out << '\n';
    for (const auto& row : matrix.rows) {
        out << row.query_id << ',' << row.true_label;
        for (int response : row.responses) out << ',' << response;
        out << '\n';
    }
}

}  // namespace quorum
