#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "quorum/ensemble_math.hpp"
#include "quorum/response_analysis.hpp"

using namespace quorum;

namespace {

// Explicit all-orderings oracle: average the correct counts of every
// permutation's growing prefixes. Prefix accuracy depends only on the prefix
// set, so this must coincide with the subset average bit for bit.
EnsembleCurve permutation_prefix_oracle(const ResponseMatrix& matrix, double prior_w) {
    const std::size_t n_models = matrix.model_count();
    const auto acc = per_model_accuracy(matrix);
    std::vector<std::size_t> order(n_models);
    std::iota(order.begin(), order.end(), 0);

    std::vector<std::int64_t> sums(n_models + 1, 0);
    std::vector<std::int64_t> mins(n_models + 1, std::numeric_limits<std::int64_t>::max());
    std::vector<std::int64_t> maxs(n_models + 1, std::numeric_limits<std::int64_t>::min());
    std::uint64_t n_perms = 0;

    do {
        ++n_perms;
        for (std::size_t m = 1; m <= n_models; ++m) {
            std::vector<std::size_t> prefix(order.begin(), order.begin() + m);
            std::sort(prefix.begin(), prefix.end());
            double p_sub = 0.0;
            for (std::size_t j : prefix) p_sub += acc[j];
            p_sub /= static_cast<double>(m);
            std::int64_t correct = 0;
            for (const auto& row : matrix.rows) {
                int k = 0;
                for (std::size_t j : prefix)
                    if (row.responses[j] == +1) ++k;
                if (map_decide(k, static_cast<int>(m), p_sub, prior_w) == row.true_label)
                    ++correct;
            }
            sums[m] += correct;
            mins[m] = std::min(mins[m], correct);
            maxs[m] = std::max(maxs[m], correct);
        }
    } while (std::next_permutation(order.begin(), order.end()));

    EnsembleCurve curve;
    const double rows = static_cast<double>(matrix.rows.size());
    for (std::size_t m = 1; m <= n_models; ++m) {
        EnsembleCurvePoint point;
        point.m = static_cast<int>(m);
        point.mean_accuracy =
            static_cast<double>(sums[m]) / (static_cast<double>(n_perms) * rows);
        point.min_accuracy = static_cast<double>(mins[m]) / rows;
        point.max_accuracy = static_cast<double>(maxs[m]) / rows;
        curve.push_back(point);
    }
    return curve;
}

}  // namespace

TEST_CASE("load_matrix parses labels and validates") {
    std::istringstream good("query_id,true_label,alpha,beta\n"
                            "q1,true,1,true\n"
                            "q2,false,-1,false\n");
    const ResponseMatrix matrix = load_matrix(good);
    CHECK(matrix.model_names == std::vector<std::string>{"alpha", "beta"});
    REQUIRE(matrix.rows.size() == 2);
    CHECK(matrix.rows[0].true_label == +1);
    CHECK(matrix.rows[1].responses == std::vector<int>{-1, -1});
    const auto acc = per_model_accuracy(matrix);
    CHECK(acc[0] == 1.0);
    CHECK(acc[1] == 1.0);

    SUBCASE("unknown label names the row") {
        std::istringstream bad("query_id,true_label,alpha\nq1,true,maybe\n");
        try {
            load_matrix(bad);
            FAIL("expected MatrixParseError");
        } catch (const MatrixParseError& e) {
            CHECK(e.row() == 2);
            CHECK(std::string(e.what()).find("maybe") != std::string::npos);
        }
    }
    SUBCASE("ragged row") {
        std::istringstream bad("query_id,true_label,alpha,beta\nq1,true,1\n");
        CHECK_THROWS_AS(load_matrix(bad), MatrixParseError);
    }
    SUBCASE("duplicate query id") {
        std::istringstream bad("query_id,true_label,alpha\nq1,true,1\nq1,false,-1\n");
        CHECK_THROWS_AS(load_matrix(bad), MatrixParseError);
    }
    SUBCASE("bad header") {
        std::istringstream bad("id,label,alpha\nq1,true,1\n");
        CHECK_THROWS_AS(load_matrix(bad), MatrixParseError);
    }
}

TEST_CASE("synthetic generation hits the requested accuracy") {
    const auto matrix = make_synthetic_matrix({0.7, 0.7, 0.7}, 0.5, 500, 31);
    CHECK(matrix.rows.size() == 500);
    const auto acc = per_model_accuracy(matrix);
    const double ci = 2.576 * std::sqrt(0.7 * 0.3 / 500.0);
    for (double a : acc) CHECK(std::abs(a - 0.7) < ci);

    // round trip through the CSV form
    std::ostringstream out;
    write_matrix_csv(out, matrix);
    std::istringstream in(out.str());
    const auto reparsed = load_matrix(in);
    CHECK(reparsed.rows.size() == matrix.rows.size());
    CHECK(per_model_accuracy(reparsed) == acc);

    // determinism
    const auto again = make_synthetic_matrix({0.7, 0.7, 0.7}, 0.5, 500, 31);
    CHECK(again.rows[123].responses == matrix.rows[123].responses);
}

TEST_CASE("subset accuracy reduces and aggregates") {
    const auto matrix = make_synthetic_matrix({0.65, 0.8}, 0.5, 4000, 7);
    const auto acc = per_model_accuracy(matrix);
    CHECK(subset_joint_accuracy(matrix, {0}, 0.5) == acc[0]);
    CHECK(subset_joint_accuracy(matrix, {1}, 0.5) == acc[1]);
    CHECK_THROWS_AS(subset_joint_accuracy(matrix, {}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(subset_joint_accuracy(matrix, {5}, 0.5), std::out_of_range);

    // all models agreeing row-by-row makes every subset the same
    ResponseMatrix agree;
    agree.model_names = {"a", "b", "c"};
    for (int r = 0; r < 50; ++r) {
        ResponseMatrix::Row row;
        row.query_id = "q" + std::to_string(r);
        row.true_label = (r % 2 == 0) ? +1 : -1;
        const int vote = (r % 3 == 0) ? row.true_label : -row.true_label;
        row.responses = {vote, vote, vote};
        agree.rows.push_back(row);
    }
    const double single = subset_joint_accuracy(agree, {0}, 0.5);
    CHECK(subset_joint_accuracy(agree, {0, 1}, 0.5) == single);
    CHECK(subset_joint_accuracy(agree, {0, 1, 2}, 0.5) == single);

    // three independent agents at p = 0.8 behave like the closed form
    const auto trio = make_synthetic_matrix({0.8, 0.8, 0.8}, 0.5, 100000, 17);
    const double expected = joint_accuracy_exact(3, 0.8, 0.5);
    const double ci = 2.576 * std::sqrt(expected * (1 - expected) / 100000.0);
    CHECK(std::abs(subset_joint_accuracy(trio, {0, 1, 2}, 0.5) - expected) < ci);
}

TEST_CASE("curve means average the singletons at m = 1") {
    const auto matrix = make_synthetic_matrix({0.6, 0.9}, 0.5, 3000, 5);
    const auto acc = per_model_accuracy(matrix);
    const auto curve = permutation_average_curve(matrix, 0.5);
    REQUIRE(curve.size() == 2);
    CHECK(curve[0].m == 1);
    CHECK(curve[0].n_subsets == 2);
    CHECK(curve[1].n_subsets == 1);
    CHECK(curve[0].mean_accuracy == doctest::Approx((acc[0] + acc[1]) / 2).epsilon(1e-12));
    CHECK(curve[0].min_accuracy == std::min(acc[0], acc[1]));
    CHECK(curve[0].max_accuracy == std::max(acc[0], acc[1]));
}

TEST_CASE("subset average equals the explicit permutation-prefix average") {
    for (std::uint64_t seed : {101, 202, 303}) {
        const auto matrix =
            make_synthetic_matrix({0.55, 0.65, 0.75, 0.85}, 0.5, 60, seed);
        const auto fast = permutation_average_curve(matrix, 0.5);
        const auto oracle = permutation_prefix_oracle(matrix, 0.5);
        REQUIRE(fast.size() == oracle.size());
        for (std::size_t i = 0; i < fast.size(); ++i) {
            // bitwise equality by construction (integer totals, one division)
            CHECK(fast[i].mean_accuracy == oracle[i].mean_accuracy);
            CHECK(fast[i].min_accuracy == oracle[i].min_accuracy);
            CHECK(fast[i].max_accuracy == oracle[i].max_accuracy);
        }
    }
}

TEST_CASE("seven identical independent models track the closed form") {
    const std::vector<double> ps(7, 0.75);
    const auto matrix = make_synthetic_matrix(ps, 0.5, 100000, 1001);
    const auto curve = permutation_average_curve(matrix, 0.5);
    REQUIRE(curve.size() == 7);
    const std::uint64_t binom7[] = {7, 21, 35, 35, 21, 7, 1};
    for (const auto& point : curve) {
        const double expected = joint_accuracy_exact(point.m, 0.75, 0.5);
        const double ci = 2.576 * std::sqrt(expected * (1 - expected) / 100000.0);
        CAPTURE(point.m);
        CHECK(std::abs(point.mean_accuracy - expected) < ci);
        CHECK(point.min_accuracy <= point.mean_accuracy);
        CHECK(point.mean_accuracy <= point.max_accuracy);
        CHECK(point.n_subsets == binom7[point.m - 1]);
    }
}

TEST_CASE("relabeling responses and truths leaves odd-m votes unchanged") {
    const auto matrix = make_synthetic_matrix({0.7, 0.75, 0.8}, 0.6, 2000, 77);
    ResponseMatrix flipped = matrix;
    for (auto& row : flipped.rows) {
        row.true_label = -row.true_label;
        for (auto& r : row.responses) r = -r;
    }
    for (const auto& subset : std::vector<std::vector<std::size_t>>{{0}, {0, 1, 2}}) {
        CHECK(subset_joint_accuracy(matrix, subset, 0.5) ==
              subset_joint_accuracy(flipped, subset, 0.5));
    }
}

TEST_CASE("bounds curve from known per-model accuracies") {
    // exact accuracies 0.62 and 0.798 by construction
    ResponseMatrix matrix;
    matrix.model_names = {"weak", "strong"};
    for (int r = 0; r < 500; ++r) {
        ResponseMatrix::Row row;
        row.query_id = "q" + std::to_string(r);
        row.true_label = +1;
        row.responses = {r < 310 ? +1 : -1, r < 399 ? +1 : -1};
        matrix.rows.push_back(row);
    }
    const auto acc = per_model_accuracy(matrix);
    CHECK(acc[0] == doctest::Approx(0.62).epsilon(1e-15));
    CHECK(acc[1] == doctest::Approx(0.798).epsilon(1e-15));

    const auto bounds = bounds_curve(matrix, 0.5);
    REQUIRE(bounds.size() == 2);
    CHECK(bounds[0].m == 1);
    CHECK(bounds[0].lower == doctest::Approx(0.62).epsilon(1e-12));
    CHECK(bounds[0].upper == doctest::Approx(0.798).epsilon(1e-12));
    CHECK(bounds[1].lower == doctest::Approx(joint_accuracy_exact(2, 0.62, 0.5)).epsilon(1e-14));

    // equal-accuracy models collapse the envelope
    const auto equal = make_synthetic_matrix({0.75}, 0.5, 100, 3);
    ResponseMatrix twice;
    twice.model_names = {"a", "b"};
    for (const auto& row : equal.rows) {
        ResponseMatrix::Row r2;
        r2.query_id = row.query_id;
        r2.true_label = row.true_label;
        r2.responses = {row.responses[0], row.responses[0]};
        twice.rows.push_back(r2);
    }
    for (const auto& point : bounds_curve(twice, 0.5)) {
        CHECK(point.lower == point.upper);
        CHECK(point.lower == point.mean_p_theory);
    }
}

TEST_CASE("empirical curve against the theory envelope (observational)") {
    const auto matrix = make_synthetic_matrix({0.6, 0.7, 0.75, 0.8}, 0.5, 20000, 9);
    const auto curve = permutation_average_curve(matrix, 0.5);
    const auto bounds = bounds_curve(matrix, 0.5);
    int violations = 0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (curve[i].mean_accuracy < bounds[i].lower - 0.02 ||
            curve[i].mean_accuracy > bounds[i].upper + 0.02)
            ++violations;
    }
    // containment is an empirical observation, not a theorem: report only
    if (violations > 0) {
        MESSAGE("envelope violations at ", violations, " of ", curve.size(), " sizes");
    }
    CHECK(curve.back().mean_accuracy > curve.front().min_accuracy);
}

TEST_CASE("curve CSV writers") {
    const auto matrix = make_synthetic_matrix({0.7, 0.8}, 0.5, 200, 2);
    std::ostringstream curve_out;
    write_curve_csv(curve_out, permutation_average_curve(matrix, 0.5));
    CHECK(curve_out.str().rfind("m,mean,min,max,n_subsets\n", 0) == 0);
    std::ostringstream bounds_out;
    write_bounds_csv(bounds_out, bounds_curve(matrix, 0.5));
    CHECK(bounds_out.str().rfind("m,lower,upper,mean_p_theory\n", 0) == 0);
}

TEST_CASE("model-count guard") {
    ResponseMatrix big;
    for (int j = 0; j < 21; ++j) big.model_names.push_back("m" + std::to_string(j));
    ResponseMatrix::Row row;
    row.query_id = "q1";
    row.true_label = +1;
    row.responses.assign(21, +1);
    big.rows.push_back(row);
    CHECK_THROWS_AS(permutation_average_curve(big, 0.5), std::invalid_argument);
}
