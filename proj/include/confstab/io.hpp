#pragma once

// File formats. Numbers are written with 17 significant digits so every
// double round-trips exactly; all outputs are canonically ordered so reruns
// are byte-identical. Class labels are 1-based on disk.

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "confstab/concentration.hpp"
#include "confstab/dataset.hpp"
#include "confstab/kernel.hpp"
#include "confstab/learners.hpp"
#include "confstab/matrix.hpp"
#include "confstab/stability.hpp"
#include "confstab/synth.hpp"

namespace confstab {

using Json = nlohmann::json;

std::string format_double(double v);

std::string read_text_file(const std::string& path);
// Writes via a temporary file and rename, so readers never see partial output.
void write_text_file(const std::string& path, std::string_view text);

// Header "q=<Q>", then one comma-separated line per row.
std::string matrix_to_csv(const Matrix& m);
Matrix matrix_from_csv(std::string_view text, const std::string& source = "<matrix>");
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

// Header "label,x1,...,xd"; labels 1..Q. If q <= 0 it is taken as the
// largest label present. Throws ParseError with the offending line.
std::string dataset_to_csv(const Dataset& d);
Dataset dataset_from_csv(std::string_view text, int q = 0, const std::string& source = "<dataset>");

Json kernel_to_json(const Kernel& k);
Kernel kernel_from_json(const Json& j, const std::string& field = "kernel");

// {"q", "kernel", "alpha", "train_points"}.
Json hypothesis_to_json(const KernelHypothesis& h);
KernelHypothesis hypothesis_from_json(const Json& j, const std::string& source = "<hypothesis>");

Json model_to_json(const ClassConditionalModel& m);
ClassConditionalModel model_from_json(const Json& j, const std::string& field = "model");

// Report tables.
std::string stability_csv(const StabilityReport& r);
// trial,deviation,bound,flags
std::string concentration_csv(const std::vector<TrialRecord>& records, double bound);
// Append-only trial log used to resume interrupted runs; keeps every field
// of TrialRecord at full precision.
std::string trial_log_header();
std::string trial_log_row(const TrialRecord& r);
// Complete rows only; a torn last line (no newline) is ignored.
std::vector<TrialRecord> trial_log_from_csv(std::string_view text, const std::string& source);
std::string tail_csv(const McDiarmidReport& r);

// Re-reads a CSV and checks the header and that every row has the same
// number of fields, numeric where `numeric` is set. Throws ParseError.
void check_csv(std::string_view text, const std::vector<std::string>& header, const std::vector<bool>& numeric,
               const std::string& source);

std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace confstab
