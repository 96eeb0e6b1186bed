#ifndef LAB_EXPERIMENT_HPP
#define LAB_EXPERIMENT_HPP

// Config-driven experiment runner.  A config names a measure, a test family,
// and a point generator, plus a dyadic N sweep; running it estimates the L2
// discrepancy at every N, fits the growth exponent on log2-log2 axes by
// weighted least squares, compares against the predicted slope
// 1/2 - beta/(2 alpha), and writes report.json, rows.csv, and plot.svg into
// the output directory.  Reports are pure functions of (config, seed):
// rerunning overwrites the files with identical bytes.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "lab/discrepancy.hpp"
#include "lab/measure.hpp"

namespace lab {

// How point sets are produced for each N in the sweep:
//   iid                 fresh iid draws from the measure (per-N stream)
//   partition           one point per equal-measure cell, centroid reps
//   equispaced-circle   arclength-uniform points on the circumference-1
//                       circle (the measure should be that circle)
//   csv                 the first N rows of a fixed point file
struct GeneratorSpec {
    std::string id = "iid";
    std::string csv_path; // csv generator only
};

struct ExperimentConfig {
    std::string name = "experiment";
    MeasureSpec measure;
    FamilySpec family; // affine window or half-space sections
    GeneratorSpec generator;
    std::vector<long long> n_list; // strictly increasing, >= 4 entries
    long long n_poses = 2048;      // pose budget per L2 estimate
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    // symmetric-difference exponent of the window; 0 = derive from the
    // window shape (1 for balls and polygons, 2 - log3(4) for the
    // snowflake region, the target exponent for rectangle unions)
    double beta = 0.0;
    double pass_band = 0.05; // verdict tolerance around the predicted slope
};

// throws std::invalid_argument naming the broken field
void validate(const ExperimentConfig& config);

// JSON round trip.  Measures and shapes use their own serializations; the
// family is {"id":"affine","a":..,"b":..,"shape":{..}} or
// {"id":"halfspace","rho_max":..} (rho_max defaults to the measure's
// support radius).  Unknown generator or family ids throw.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);

struct SlopeFit {
    double slope = 0.0;
    double std_error = 0.0; // from the weighted least-squares covariance
    // the smallest N is excluded when its stderr exceeds 25% of its value
    bool dropped_smallest = false;
};

// Weighted least squares of log2(value) against log2(N); weights come from
// the per-point delta-method errors se / (value ln 2).
SlopeFit fit_l2_slope(const std::vector<long long>& n,
                      const std::vector<L2Estimate>& rows);

struct ExperimentReport {
    std::string name;
    std::vector<long long> n;
    std::vector<L2Estimate> rows; // one per N
    SlopeFit fit;
    double predicted_slope = 0.0;
    std::string provenance; // where (alpha, beta) or the iid rate came from
    double pass_band = 0.05;
    bool pass = false;
};

// Runs the sweep and writes report.json, rows.csv, plot.svg under
// config.out_dir (created if missing).  Any module failure is rethrown as a
// runtime_error naming the config, the stage, and the N being processed.
ExperimentReport run_experiment(const ExperimentConfig& config);

nlohmann::json report_to_json(const ExperimentReport& report,
                              const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// suites

struct SuiteRow {
    std::string name;
    double slope = 0.0;
    double std_error = 0.0;
    double predicted = 0.0;
    bool pass = false;
};

struct SuiteSummary {
    std::vector<SuiteRow> rows;
    bool all_pass = true;
};

// Manifest: {"configs": ["relative/path.json", ...]} resolved against the
// manifest's directory.  Each config runs with out_dir = out_dir/<name>;
// summary.csv lands in out_dir with one verdict row per config.  A missing
// config file throws a runtime_error naming the path.
SuiteSummary run_suite(const std::string& manifest_path, const std::string& out_dir);

} // namespace lab

#endif
