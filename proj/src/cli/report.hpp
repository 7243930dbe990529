#pragma once

#include "json.hpp"

#include "obetc/cli.hpp"

namespace obetc::cli::detail {

nlohmann::json to_json(const Matrix& m);
nlohmann::json to_json(const Vector& v);
nlohmann::json to_json(const numerics::Spectrum& s);
nlohmann::json scenario_json(const Scenario& s);
nlohmann::json metrics_json(const sim::MetricsReport& m);
std::string metrics_text(const sim::MetricsReport& m);

void write_text(const fs::path& path, const std::string& text);
void write_json(const fs::path& path, const nlohmann::json& j);
void write_sweep_csv(const std::vector<sim::SweepPoint>& points, const fs::path& path);

}  // namespace obetc::cli::detail
