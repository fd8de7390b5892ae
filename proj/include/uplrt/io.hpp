#pragma once

#include <cstdint>
#include <string>

#include "uplrt/calibration.hpp"
#include "uplrt/model.hpp"
#include "uplrt/null_dist.hpp"
#include "uplrt/sim.hpp"
#include "uplrt/test_statistics.hpp"

namespace uplrt {

struct csv_parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Two numeric columns per row, comma or whitespace delimited; a non-numeric
// first row is treated as a header. Rows are sorted into (y_lo, y_hi).
UnorderedDataset read_pairs_csv(const std::string& path);
UnorderedDataset parse_pairs_csv(const std::string& content,
                                 const std::string& origin = "<input>");

std::uint64_t fnv1a_hash(const std::string& bytes);

std::string library_version();

// structured report documents (JSON)
std::string report_to_json(const TestReport& rep, std::uint64_t input_hash,
                           std::uint64_t seed);

std::string coefficients_to_json(const CoefficientSet& cs,
                                 const std::string& provenance_note,
                                 const std::vector<std::size_t>& grid,
                                 std::size_t reps, std::uint64_t seed);
CoefficientSet coefficients_from_json(const std::string& content);
CoefficientSet read_coefficients(const std::string& path);

// rejection table as CSV with a commented metadata header
std::string rejection_table_to_csv(const RejectionTable& table,
                                   bool include_timestamp = true);

}  // namespace uplrt
