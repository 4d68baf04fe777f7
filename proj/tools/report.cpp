#include "report.hpp"

#include <sstream>
#include <stdexcept>

#include "crowdvote/csv.hpp"
#include "crowdvote/format.hpp"

namespace crowdvote::report {

Format parse_format(const std::string& name) {
    if (name == "csv") return Format::Csv;
    if (name == "json") return Format::Json;
    throw std::invalid_argument("unknown output format: " + name);
}

const char* extension(Format f) { return f == Format::Csv ? "csv" : "json"; }

void Table::add(std::vector<Json> row) {
    if (row.size() != columns.size()) {
        throw std::logic_error("table '" + name + "': row width does not match the header");
    }
    rows.push_back(std::move(row));
}

namespace {

std::string csv_cell(const Json& v) {
    switch (v.type()) {
        case Json::value_t::null:
            return "";
        case Json::value_t::string:
            return csv::escape(v.get_ref<const std::string&>());
        case Json::value_t::boolean:
            return v.get<bool>() ? "true" : "false";
        case Json::value_t::number_integer:
            return std::to_string(v.get<std::int64_t>());
        case Json::value_t::number_unsigned:
            return std::to_string(v.get<std::uint64_t>());
        case Json::value_t::number_float:
            return format_double(v.get<double>());
        default:
            return csv::escape(v.dump());
    }
}

std::string comment_value(const Json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
}

}  // namespace

std::string emit_report(const Report& report, Format format) {
    if (format == Format::Json) {
        Json doc = Json::object();
        doc["provenance"] = report.provenance;
        if (!report.summary.is_null()) doc["summary"] = report.summary;
        Json tables = Json::object();
        for (const auto& t : report.tables) {
            Json rows = Json::array();
            for (const auto& r : t.rows) rows.push_back(Json(r));
            tables[t.name] = Json{{"columns", t.columns}, {"rows", std::move(rows)}};
        }
        doc["tables"] = std::move(tables);
        return doc.dump(2) + "\n";
    }

    std::ostringstream out;
    for (const auto& [key, value] : report.provenance.items()) {
        out << "# " << key << ": " << comment_value(value) << '\n';
    }
    if (!report.summary.is_null()) out << "# summary: " << report.summary.dump() << '\n';
    bool first = true;
    for (const auto& t : report.tables) {
        if (!first) out << '\n';
        first = false;
        out << "# table: " << t.name << '\n';
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            out << (c ? "," : "") << csv::escape(t.columns[c]);
        }
        out << '\n';
        for (const auto& row : t.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << csv_cell(row[c]);
            out << '\n';
        }
    }
    return out.str();
}

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json to_json(const DatasetSummary& s) {
    Json trials = Json::array();
    for (const auto& f : s.trials) {
        trials.push_back(Json{{"dataset_id", f.dataset_id},
                              {"trial_id", f.trial_id},
                              {"counted", f.counted},
                              {"matched", f.matched},
                              {"unchanged", f.unchanged},
                              {"fit", optional_number(f.fit)},
                              {"mean_improved", f.mean_improved},
                              {"subjects", f.subjects},
                              {"between_count", f.between_count}});
    }
    return Json{{"dataset_id", s.dataset_id},
                {"resolution", s.resolution},
                {"policy", to_string(s.policy)},
                {"trials_scored", s.trials_scored},
                {"mean_fit", s.mean_fit},
                {"stderr_fit", s.stderr_fit},
                {"between_fraction", s.between_fraction},
                {"between_fraction_trial_mean", s.between_fraction_trial_mean},
                {"mean_improved_fraction", s.mean_improved_fraction},
                {"trials", std::move(trials)},
                {"warnings", s.warnings}};
}

DatasetSummary summary_from_json(const Json& j) {
    DatasetSummary s;
    s.dataset_id = j.at("dataset_id").get<std::string>();
    s.resolution = j.at("resolution").get<double>();
    s.policy = parse_unchanged_policy(j.at("policy").get<std::string>());
    s.trials_scored = j.at("trials_scored").get<std::size_t>();
    s.mean_fit = j.at("mean_fit").get<double>();
    s.stderr_fit = j.at("stderr_fit").get<double>();
    s.between_fraction = j.at("between_fraction").get<double>();
    s.between_fraction_trial_mean = j.at("between_fraction_trial_mean").get<double>();
    s.mean_improved_fraction = j.at("mean_improved_fraction").get<double>();
    for (const auto& t : j.at("trials")) {
        TrialFit f;
        f.dataset_id = t.at("dataset_id").get<std::string>();
        f.trial_id = t.at("trial_id").get<std::string>();
        f.counted = t.at("counted").get<std::size_t>();
        f.matched = t.at("matched").get<std::size_t>();
        f.unchanged = t.at("unchanged").get<std::size_t>();
        if (!t.at("fit").is_null()) f.fit = t.at("fit").get<double>();
        f.mean_improved = t.at("mean_improved").get<bool>();
        f.subjects = t.at("subjects").get<std::size_t>();
        f.between_count = t.at("between_count").get<std::size_t>();
        s.trials.push_back(std::move(f));
    }
    s.warnings = j.at("warnings").get<std::vector<std::string>>();
    return s;
}

}  // namespace crowdvote::report
