#pragma once

#include <array>
#include <string_view>

// Published baseline / framework / improvement cells for six models, used to
// check improvement_pct arithmetic. Improvement values are in percent.
namespace reftables {

struct Cell {
    std::string_view model;
    std::string_view column;
    double baseline;
    double ours;
    double improvement;
};

// Localization, lower is better. RMSE and MAE rows.
inline constexpr std::array<Cell, 12> kLocalization{{
    {"Llama2-7B", "RMSE", 0.374, 0.355, 5.1},
    {"Mistral-7B", "RMSE", 11.570, 9.995, 13.6},
    {"Claude-3.5", "RMSE", 0.829, 0.404, 51.3},
    {"Gemini-pro", "RMSE", 2.318, 0.313, 86.5},
    {"GPT-3.5", "RMSE", 2.598, 0.719, 72.3},
    {"GPT-4o-mini", "RMSE", 0.741, 0.402, 45.7},
    {"Llama2-7B", "MAE", 0.313, 0.295, 5.8},
    {"Mistral-7B", "MAE", 9.347, 7.980, 14.6},
    {"Claude-3.5", "MAE", 0.696, 0.341, 51.0},
    {"Gemini-pro", "MAE", 1.814, 0.265, 85.4},
    {"GPT-3.5", "MAE", 1.937, 0.592, 69.4},
    {"GPT-4o-mini", "MAE", 0.581, 0.341, 41.3},
}};

// Classification accuracy in percent, higher is better.
inline constexpr std::array<Cell, 30> kAccuracy{{
    {"Llama2-7B", "HAR-2cls", 50.0, 57.2, 14.4},
    {"Llama2-7B", "HAR-3cls", 32.8, 38.0, 15.9},
    {"Llama2-7B", "Heartbeat", 50.0, 54.5, 9.0},
    {"Llama2-7B", "Machine", 35.0, 56.4, 61.1},
    {"Llama2-7B", "Occupancy", 48.4, 82.5, 70.5},
    {"Mistral-7B", "HAR-2cls", 66.0, 89.0, 34.8},
    {"Mistral-7B", "HAR-3cls", 21.8, 54.0, 147.7},
    {"Mistral-7B", "Heartbeat", 46.0, 66.0, 43.5},
    {"Mistral-7B", "Machine", 50.0, 92.1, 84.2},
    {"Mistral-7B", "Occupancy", 50.0, 61.1, 22.2},
    {"Claude-3.5", "HAR-2cls", 98.4, 100.0, 1.6},
    {"Claude-3.5", "HAR-3cls", 72.0, 98.7, 37.1},
    {"Claude-3.5", "Heartbeat", 52.0, 83.0, 59.6},
    {"Claude-3.5", "Machine", 50.5, 86.3, 70.9},
    {"Claude-3.5", "Occupancy", 50.0, 82.5, 65.0},
    {"Gemini-pro", "HAR-2cls", 96.0, 98.0, 2.1},
    {"Gemini-pro", "HAR-3cls", 56.7, 82.8, 46.0},
    {"Gemini-pro", "Heartbeat", 49.0, 73.5, 50.0},
    {"Gemini-pro", "Machine", 48.5, 70.1, 44.5},
    {"Gemini-pro", "Occupancy", 55.9, 66.2, 18.4},
    {"GPT-3.5", "HAR-2cls", 81.0, 92.1, 13.7},
    {"GPT-3.5", "HAR-3cls", 40.7, 55.3, 35.9},
    {"GPT-3.5", "Heartbeat", 37.0, 58.5, 58.1},
    {"GPT-3.5", "Machine", 49.5, 61.5, 24.2},
    {"GPT-3.5", "Occupancy", 50.0, 92.1, 84.2},
    {"GPT-4o-mini", "HAR-2cls", 89.0, 100.0, 12.4},
    {"GPT-4o-mini", "HAR-3cls", 37.3, 77.8, 108.6},
    {"GPT-4o-mini", "Heartbeat", 44.0, 68.0, 54.5},
    {"GPT-4o-mini", "Machine", 57.0, 92.5, 62.3},
    {"GPT-4o-mini", "Occupancy", 82.3, 92.7, 12.6},
}};

}  // namespace reftables
