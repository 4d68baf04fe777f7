#pragma once

#include <string>
#include <vector>

#include "crowdvote/reanalysis.hpp"
#include "json.hpp"

namespace crowdvote::report {

using Json = nlohmann::ordered_json;

enum class Format { Csv, Json };

Format parse_format(const std::string& name);
const char* extension(Format f);

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Json>> rows;

    void add(std::vector<Json> row);
};

/// Everything a command produces. Field order is insertion order, so output
/// bytes depend only on the values.
struct Report {
    Json provenance = Json::object();
    Json summary;  // null when the command has no summary
    std::vector<Table> tables;
};

/// CSV: '#' provenance and summary lines, then each table as a header row
/// plus data rows, separated by a blank line. JSON: one document with
/// provenance, summary and tables keys.
std::string emit_report(const Report& report, Format format);

Json to_json(const DatasetSummary& summary);
DatasetSummary summary_from_json(const Json& j);

}  // namespace crowdvote::report
