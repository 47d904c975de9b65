#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "clickseq/experiment.hpp"

namespace clickseq {

/// course,dimension,value,feature_set,model,split,seed,accuracy,n
void write_results_csv(std::ostream& out, std::span<const ExperimentCell> cells);
std::vector<ExperimentCell> read_results_csv(std::istream& in);
std::vector<ExperimentCell> load_results_csv(const std::filesystem::path& path);

/// config_a,config_b,t,df,p,significant@0.05
void write_significance_csv(std::ostream& out, std::span<const SignificanceRow> rows);

void write_skipped_csv(std::ostream& out, std::span<const SkippedCell> rows);
void write_exclusions_csv(std::ostream& out, std::span<const Exclusion> rows);

struct PlotSeries {
  std::string name;              // feature_set/model
  std::vector<double> accuracy;  // one per x label, NaN where missing
};

struct PlotData {
  std::string dimension;
  std::vector<std::string> x_labels;  // numeric values ascending, then All
  std::vector<PlotSeries> series;
};

/// Groups test (or transfer) rows by dimension; accuracies of repeated
/// seeds are averaged. Train rows are ignored unless nothing else exists.
std::vector<PlotData> plot_data(std::span<const ExperimentCell> cells);

/// Line chart of accuracy against prefix value, one polyline per series.
std::string render_svg(const PlotData& data);

/// Writes accuracy_<dimension>.svg per dimension and returns the paths.
std::vector<std::filesystem::path> write_plots(std::span<const ExperimentCell> cells,
                                               const std::filesystem::path& dir);

}  // namespace clickseq
