#ifndef POWERCAP_PARAMS_IO_HPP
#define POWERCAP_PARAMS_IO_HPP

#include "powercap/cell_model.hpp"

#include <json.hpp>

#include <filesystem>

namespace powercap {

/// Parses a JSON document; `//` and `/* */` comments are allowed.
nlohmann::json read_json(const std::filesystem::path& path);

ModelParams model_params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelParams& params);

/// Parameter file: sections `ndc`, `thermal`, `ocv` ([v_s, u] pairs),
/// `capacity_ah`, `t_amb`. SI units.
ModelParams load_model_params(const std::filesystem::path& path);
void save_model_params(const ModelParams& params, const std::filesystem::path& path, const std::string& header = {});

} // namespace powercap

#endif // POWERCAP_PARAMS_IO_HPP
