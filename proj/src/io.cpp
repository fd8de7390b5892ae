#include "uplrt/io.hpp"

#include <cctype>
#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace uplrt {

using nlohmann::json;

namespace {

bool parse_two_numbers(const std::string& line, double& a, double& b) {
    std::string s = line;
    for (auto& ch : s)
        if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
    std::istringstream in(s);
    std::string ta, tb, rest;
    if (!(in >> ta >> tb)) return false;
    if (in >> rest) return false;  // more than two columns
    std::size_t pa = 0, pb = 0;
    try {
        a = std::stod(ta, &pa);
        b = std::stod(tb, &pb);
    } catch (const std::exception&) {
        return false;
    }
    return pa == ta.size() && pb == tb.size();
}

bool blank_or_comment(const std::string& line) {
    for (char ch : line) {
        if (ch == '#') return true;
        if (!std::isspace(static_cast<unsigned char>(ch))) return false;
    }
    return true;
}

json theta_to_json(const Theta& t) {
    return json{{"mu1", t.mu1}, {"mu2", t.mu2}, {"sigma1", t.sigma1},
                {"sigma2", t.sigma2}, {"rho", t.rho}};
}

}  // namespace

UnorderedDataset parse_pairs_csv(const std::string& content,
                                 const std::string& origin) {
    std::istringstream in(content);
    std::string line;
    std::vector<UnorderedPair> pairs;
    std::size_t line_no = 0;
    bool first_data_line = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (blank_or_comment(line)) continue;
        double a, b;
        if (!parse_two_numbers(line, a, b)) {
            if (first_data_line) {  // header row
                first_data_line = false;
                continue;
            }
            throw csv_parse_error(origin + ":" + std::to_string(line_no)
                                  + ": expected two numeric columns");
        }
        first_data_line = false;
        pairs.emplace_back(a, b);
    }
    return UnorderedDataset(std::move(pairs));
}

UnorderedDataset read_pairs_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw csv_parse_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_pairs_csv(buf.str(), path);
}

std::uint64_t fnv1a_hash(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string library_version() { return "0.1.0"; }

std::string report_to_json(const TestReport& rep, std::uint64_t input_hash,
                           std::uint64_t seed) {
    json tests = json::array();
    const TestId ids[4] = {TestId::Rn1, TestId::Rn2, TestId::Rn1Star,
                           TestId::Rn2Star};
    for (TestId id : ids) {
        const int k = static_cast<int>(id);
        json t{{"name", test_name(id)}};
        if (rep.ok(id)) {
            t["statistic"] = rep.statistic(id);
            t["p_raw"] = rep.p_raw[k];
            t["p_adjusted"] = rep.p_adj[k];
            t["weight_clipped"] = rep.weight_clipped[k];
        } else {
            t["error"] = rep.errors[k];
        }
        tests.push_back(std::move(t));
    }
    json fits = json::array();
    for (const auto& f : rep.fits) {
        fits.push_back(json{{"constraint", constraint_name(f.constraint)},
                            {"theta", theta_to_json(f.theta)},
                            {"loglik", f.loglik},
                            {"converged", f.converged},
                            {"n_starts", f.n_starts},
                            {"best_start_index", f.best_start_index}});
    }
    json doc{{"kind", "test_report"},
             {"version", library_version()},
             {"n", rep.n},
             {"input_hash", input_hash},
             {"seed", seed},
             {"tests", std::move(tests)},
             {"fits", std::move(fits)}};
    return doc.dump(2);
}

std::string coefficients_to_json(const CoefficientSet& cs,
                                 const std::string& provenance_note,
                                 const std::vector<std::size_t>& grid,
                                 std::size_t reps, std::uint64_t seed) {
    json entries = json::array();
    const TestId ids[4] = {TestId::Rn1, TestId::Rn2, TestId::Rn1Star,
                           TestId::Rn2Star};
    for (TestId id : ids) {
        const auto& c = cs[id];
        entries.push_back(json{
            {"test", test_name(id)},
            {"intercept", c.kind == AdjKind::Weight ? 0.5 : 1.0},
            {"a", c.a},
            {"b", c.b},
            {"kind", c.kind == AdjKind::Weight ? "weight" : "scale"}});
    }
    json doc{{"kind", "adjustment_coefficients"},
             {"version", library_version()},
             {"coefficients", std::move(entries)},
             {"provenance", json{{"note", provenance_note},
                                 {"grid", grid},
                                 {"reps", reps},
                                 {"seed", seed}}}};
    return doc.dump(2);
}

CoefficientSet coefficients_from_json(const std::string& content) {
    const json doc = json::parse(content);
    CoefficientSet cs = CoefficientSet::paper_defaults();
    for (const auto& e : doc.at("coefficients")) {
        const std::string name = e.at("test").get<std::string>();
        TestId id;
        if (name == "Rn1") id = TestId::Rn1;
        else if (name == "Rn2") id = TestId::Rn2;
        else if (name == "Rn1*") id = TestId::Rn1Star;
        else if (name == "Rn2*") id = TestId::Rn2Star;
        else throw std::runtime_error("coefficients: unknown test id " + name);
        AdjustmentCoefficients c;
        c.a = e.at("a").get<double>();
        c.b = e.at("b").get<double>();
        const std::string kind = e.at("kind").get<std::string>();
        if (kind == "weight") c.kind = AdjKind::Weight;
        else if (kind == "scale") c.kind = AdjKind::Scale;
        else throw std::runtime_error("coefficients: unknown kind " + kind);
        if (!(c.b > 0.0)) throw std::runtime_error("coefficients: b must be > 0");
        cs[id] = c;
    }
    return cs;
}

CoefficientSet read_coefficients(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open coefficients file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return coefficients_from_json(buf.str());
}

std::string rejection_table_to_csv(const RejectionTable& table,
                                   bool include_timestamp) {
    std::ostringstream out;
    out.precision(17);
    const auto& cfg = table.config;
    out << "# uplrt rejection table v" << library_version() << "\n";
    if (include_timestamp) {
        const auto now = std::chrono::system_clock::now();
        out << "# timestamp_unix "
            << std::chrono::duration_cast<std::chrono::seconds>(
                   now.time_since_epoch()).count() << "\n";
    }
    out << "# n " << cfg.n << " reps " << cfg.reps << " seed " << cfg.seed << "\n";
    out << "# theta " << cfg.theta.mu1 << " " << cfg.theta.mu2 << " "
        << cfg.theta.sigma1 << " " << cfg.theta.sigma2 << " " << cfg.theta.rho
        << "\n";
    out << "# completed " << table.completed << " failures " << table.failures
        << "\n";
    out << "test,calibration,level,rejection_percent,std_error_percent\n";
    const TestId ids[4] = {TestId::Rn1, TestId::Rn2, TestId::Rn1Star,
                           TestId::Rn2Star};
    for (int t = 0; t < 4; ++t) {
        if (!cfg.which_tests[t]) continue;
        for (std::size_t l = 0; l < table.levels.size(); ++l) {
            if (cfg.mode != CalibrationMode::Adjusted)
                out << test_name(ids[t]) << ",raw," << table.levels[l] << ","
                    << table.raw[t][l].percent << "," << table.raw[t][l].std_error
                    << "\n";
            if (cfg.mode != CalibrationMode::Raw)
                out << test_name(ids[t]) << ",adjusted," << table.levels[l] << ","
                    << table.adjusted[t][l].percent << ","
                    << table.adjusted[t][l].std_error << "\n";
        }
    }
    return out.str();
}

}  // namespace uplrt
