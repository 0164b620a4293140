#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "carts/convergence.hpp"
#include "carts/domain.hpp"
#include "carts/errors.hpp"
#include "carts/pipeline.hpp"

namespace carts::io {

/// Parses one dataset line:
///   {"module_id": str, "anchor_id": str?, "items": [{"id", "catalog", "title", "supplement"?}]}
/// Throws SchemaError carrying `line_no`.
ModuleJob parse_job(std::string_view line, std::size_t line_no);
std::string job_to_line(const ModuleJob& job);

/// One job per non-empty line. Throws FileNotFound or the first SchemaError.
std::vector<ModuleJob> load_jobs(const std::filesystem::path& path);

struct DatasetLoad {
    std::vector<ModuleJob> jobs;
    std::vector<SchemaError> errors;
};

/// Like load_jobs, but a malformed line only drops that job.
DatasetLoad load_jobs_lenient(const std::filesystem::path& path);

/// Single-line record with a fixed field order; see README for the layout.
std::string result_to_line(const PipelineResult& result);
/// Throws SchemaError.
PipelineResult parse_result(std::string_view line, std::size_t line_no = 1);

/// Writes one record per result. Throws IoError.
void write_results(std::span<const PipelineResult> results, const std::filesystem::path& path);
std::vector<PipelineResult> read_results(const std::filesystem::path& path);

/// Simulation report as one JSON line; traces are not included.
std::string sim_report_to_line(const lab::SimReport& report);
/// One JSON array per trial trace.
void write_traces(const lab::SimReport& report, const std::filesystem::path& path);

}  // namespace carts::io
