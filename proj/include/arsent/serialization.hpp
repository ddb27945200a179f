#pragma once

#include <nlohmann/json.hpp>

#include "arsent/core.hpp"
#include "arsent/latency.hpp"
#include "arsent/obstruction.hpp"
#include "arsent/vim.hpp"

namespace arsent {

nlohmann::json to_json(const Verdict& v);
Verdict verdict_from_json(const nlohmann::json& j);
nlohmann::json to_json(const OcrToken& t);
OcrToken token_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LatencyTrace& trace);
nlohmann::json to_json(const TokenDiff& diff);
nlohmann::json to_json(const ObstructionReport& report);
nlohmann::json to_json(const VimReport& report);

}  // namespace arsent
