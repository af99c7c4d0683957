#include "powercap/params_io.hpp"

#include "powercap/error.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace powercap {

using nlohmann::json;

json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw MissingArtifact("file " + path.string() + " not found", "");
    try {
        return json::parse(in, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

namespace {

double number(const json& j, const char* section, const char* key)
{
    const json& s = section ? j.at(section) : j;
    if (!s.contains(key))
        throw ParseError(std::string("missing parameter ") + (section ? std::string(section) + "." : "") + key);
    const json& v = s.at(key);
    if (!v.is_number())
        throw ParseError(std::string("parameter ") + key + " is not a number");
    return v.get<double>();
}

} // namespace

ModelParams model_params_from_json(const json& j)
{
    for (const char* section : {"ndc", "thermal", "ocv"})
        if (!j.contains(section))
            throw ParseError(std::string("parameter file is missing section '") + section + "'");
    ModelParams p;
    p.ndc.r_b = number(j, "ndc", "r_b");
    p.ndc.c_b = number(j, "ndc", "c_b");
    p.ndc.c_s = number(j, "ndc", "c_s");
    p.ndc.r_0 = number(j, "ndc", "r_0");
    p.ndc.r_1 = number(j, "ndc", "r_1");
    p.ndc.c_1 = number(j, "ndc", "c_1");
    p.thermal.r_core = number(j, "thermal", "r_core");
    p.thermal.r_surf = number(j, "thermal", "r_surf");
    p.thermal.c_core = number(j, "thermal", "c_core");
    p.thermal.c_surf = number(j, "thermal", "c_surf");
    p.capacity_ah = number(j, nullptr, "capacity_ah");
    p.t_amb = number(j, nullptr, "t_amb");

    std::vector<std::pair<double, double>> points;
    const json& table = j.at("ocv");
    if (!table.is_array())
        throw ParseError("ocv must be an array of [v_s, u] pairs");
    for (const auto& row : table) {
        if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number())
            throw ParseError("ocv entries must be [v_s, u] number pairs");
        points.emplace_back(row[0].get<double>(), row[1].get<double>());
    }
    try {
        p.ndc.ocv = OcvCurve(std::move(points));
        validate(p);
    } catch (const InvalidArgument& e) {
        throw ParseError(e.what());
    }
    return p;
}

json to_json(const ModelParams& p)
{
    json j;
    j["capacity_ah"] = p.capacity_ah;
    j["t_amb"] = p.t_amb;
    j["ndc"] = {{"r_b", p.ndc.r_b}, {"c_b", p.ndc.c_b}, {"c_s", p.ndc.c_s},
                {"r_0", p.ndc.r_0}, {"r_1", p.ndc.r_1}, {"c_1", p.ndc.c_1}};
    j["thermal"] = {{"r_core", p.thermal.r_core},
                    {"r_surf", p.thermal.r_surf},
                    {"c_core", p.thermal.c_core},
                    {"c_surf", p.thermal.c_surf}};
    json table = json::array();
    for (const auto& [v, u] : p.ndc.ocv.breakpoints())
        table.push_back({v, u});
    j["ocv"] = table;
    return j;
}

ModelParams load_model_params(const std::filesystem::path& path)
{
    try {
        return model_params_from_json(read_json(path));
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void save_model_params(const ModelParams& params, const std::filesystem::path& path, const std::string& header)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw Error("cannot open " + path.string() + " for writing");
    std::istringstream lines(header);
    for (std::string line; std::getline(lines, line);)
        out << "// " << line << '\n';
    out << std::setw(2) << to_json(params) << '\n';
}

} // namespace powercap
