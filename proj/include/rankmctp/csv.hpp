#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rankmctp/dataset.hpp"

namespace rankmctp {

struct ColumnMapping {
  std::string subject = "subject";
  std::string group = "group";
  std::string time = "time";
  std::string value = "value";
};

struct IngestOptions {
  ColumnMapping columns;
  // When non-empty, fixes the level order; otherwise first appearance wins.
  std::vector<std::string> group_order;
  std::vector<std::string> time_order;
};

// Parse long-format CSV (header row, comma separated) into a complete
// Dataset. Every subject must have exactly one value per repeated measure.
Dataset ingest_long_csv(std::istream& in, const IngestOptions& opts = {});
Dataset ingest_long_csv_file(const std::string& path, const IngestOptions& opts = {});

// Round-trip serializer for fixtures.
void write_long_csv(std::ostream& out, const Dataset& data,
                    const ColumnMapping& columns = {});

}  // namespace rankmctp
