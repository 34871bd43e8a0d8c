#include <fmt/format.h>
#include <fmt/ranges.h>

#include "iotllm/benchmark.hpp"
#include "iotllm/error.hpp"
#include "iotllm/text.hpp"

namespace iotllm {

std::string_view to_string(TaskId id)
{
    switch (id) {
    case TaskId::har2: return "har2";
    case TaskId::har3: return "har3";
    case TaskId::machine: return "machine";
    case TaskId::heartbeat: return "heartbeat";
    case TaskId::occupancy: return "occupancy";
    case TaskId::localization: return "localization";
    }
    return "har2";
}

const std::vector<TaskId>& all_tasks()
{
    static const std::vector<TaskId> tasks{TaskId::har2,      TaskId::har3,      TaskId::machine,
                                           TaskId::heartbeat, TaskId::occupancy, TaskId::localization};
    return tasks;
}

TaskId task_from_string(std::string_view s)
{
    for (auto id : all_tasks()) {
        if (to_string(id) == s) {
            return id;
        }
    }
    throw Error(ErrorCode::config, fmt::format("unknown task '{}'", s));
}

namespace {

std::string one_of(const std::vector<std::string>& labels)
{
    return fmt::format("exactly one of: {}", fmt::join(labels, ", "));
}

const std::string kImuOverview =
    "Triaxial linear acceleration from the accelerometer (ax, ay, az) and triaxial angular velocity from the "
    "gyroscope (gx, gy, gz) of a smartphone, recorded while a person performs one activity. Acceleration includes "
    "gravity, so a still device reads about 1 g along the axis pointing up.";

const std::string kImuRole =
    "You are an expert in human activity recognition with wearable inertial sensors. You know how accelerometer "
    "and gyroscope signals reflect gait, posture and posture transitions, and you reason carefully from the "
    "physical meaning of each axis.";

TaskSpec make_har2()
{
    TaskSpec t;
    t.id = TaskId::har2;
    t.labels = {"WALKING", "STANDING"};
    t.data_type = "IMU";
    t.dataset_file = "har.csv";
    t.source_rate_hz = 50.0;
    t.downsample_factor = 5;
    t.context.collection_overview = kImuOverview;
    t.context.device_placement = "smartphone worn on the waist";
    t.context.extra_metadata = {{"Original sampling rate", "50 Hz, down-sampled for this description"}};
    t.task_description =
        "Based on the IMU data, determine which activity the person is performing: WALKING or STANDING.";
    t.default_role = kImuRole;
    t.answer_hint = one_of(t.labels);
    return t;
}

TaskSpec make_har3()
{
    TaskSpec t = make_har2();
    t.id = TaskId::har3;
    t.labels = {"LYING", "WALKING UPSTAIRS", "LIE TO SIT"};
    t.task_description = "Based on the IMU data, determine which activity the person is performing: LYING, "
                         "WALKING UPSTAIRS, or LIE TO SIT (the transition from lying down to sitting).";
    t.answer_hint = one_of(t.labels);
    return t;
}

TaskSpec make_machine()
{
    TaskSpec t;
    t.id = TaskId::machine;
    t.labels = {"close to failure", "full efficiency"};
    t.data_type = "hydraulic";
    t.dataset_file = "machine.csv";
    t.tabular = true;
    t.context.collection_overview =
        "Summary of one 60-second load cycle of a hydraulic test rig: mean temperatures at four measurement "
        "points (ts1 to ts4), the cooling power of the cooler and its cooling efficiency.";
    t.context.device_placement = "sensors mounted on the hydraulic circuit and the cooler";
    t.task_description = "Based on the sensor readings, determine the condition of the cooler: close to failure "
                         "or full efficiency.";
    t.default_role =
        "You are an experienced maintenance engineer for industrial hydraulic systems. You diagnose cooler "
        "degradation from temperature, cooling power and efficiency measurements.";
    t.answer_hint = one_of(t.labels);
    return t;
}

TaskSpec make_heartbeat()
{
    TaskSpec t;
    t.id = TaskId::heartbeat;
    t.labels = {"N", "V"};
    t.data_type = "ECG";
    t.dataset_file = "heartbeat.csv";
    t.source_rate_hz = 360.0;
    t.downsample_factor = 5;
    t.context.collection_overview =
        "A one-second single-lead electrocardiogram window centred on one heartbeat from an ambulatory recording.";
    t.context.device_placement = "modified limb lead II (MLII), chest electrodes";
    t.context.extra_metadata = {{"Original sampling rate", "360 Hz, down-sampled for this description"}};
    t.task_description = "Classify this heartbeat as a normal beat (N) or a premature ventricular contraction (V).";
    t.default_role =
        "You are a cardiologist experienced in reading electrocardiograms. You recognise normal sinus beats and "
        "ventricular ectopic beats from QRS morphology, timing and the presence of P waves.";
    t.answer_hint = "exactly one of: N, V";
    return t;
}

TaskSpec make_occupancy()
{
    TaskSpec t;
    t.id = TaskId::occupancy;
    t.labels = {"occupied", "empty"};
    t.data_type = "CSI";
    t.dataset_file = "occupancy.csv";
    t.tabular = true;
    t.context.collection_overview =
        "Summary statistics of WiFi channel state information (CSI) amplitude over a short window, measured by a "
        "router operating at 5 GHz with 40 MHz bandwidth inside a room.";
    t.context.device_placement = "router and receiver placed at fixed positions in the room";
    t.task_description = "Based on the CSI statistics, determine whether the room is occupied or empty.";
    t.default_role =
        "You are a wireless sensing researcher. You understand how human presence and motion perturb WiFi channel "
        "state information through multipath changes.";
    t.answer_hint = one_of(t.labels);
    return t;
}

TaskSpec make_localization()
{
    TaskSpec t;
    t.id = TaskId::localization;
    t.kind = TaskKind::regression;
    t.data_type = "RSSI";
    t.dataset_file = "localization.csv";
    t.tabular = true;
    t.context.collection_overview =
        "Received signal strength (RSSI) of WiFi signals from four anchors at the corners of a 10 m x 10 m room: "
        "anchor 1 at (0, 0), anchor 2 at (10, 0), anchor 3 at (0, 10) and anchor 4 at (10, 10), coordinates in "
        "meters.";
    t.context.device_placement = "receiver carried by the person being located";
    t.task_description = "Estimate the position (x, y) of the receiver in meters.";
    t.default_role =
        "You are an indoor positioning expert. You estimate locations from RSSI using radio propagation "
        "knowledge such as log-distance path loss and trilateration.";
    t.answer_hint = "the estimated position written as (x, y) in meters, for example (3.20, 4.75)";
    return t;
}

}  // namespace

const TaskSpec& task_spec(TaskId id)
{
    static const std::vector<TaskSpec> specs{make_har2(),      make_har3(),      make_machine(),
                                             make_heartbeat(), make_occupancy(), make_localization()};
    return specs.at(static_cast<std::size_t>(id));
}

std::string reference_answer(const GroundTruth& truth)
{
    if (const auto* label = std::get_if<std::string>(&truth)) {
        return *label;
    }
    const auto& p = std::get<Point>(truth);
    return fmt::format("({}, {})", text::shortest(p.x_m), text::shortest(p.y_m));
}

const std::vector<AblationStep>& ablation_ladder()
{
    static const std::vector<AblationStep> ladder{
        {"Baseline", {false, false, false, false}},
        {"+simplification", {true, false, false, false}},
        {"+domain knowledge", {true, true, false, false}},
        {"+demonstrations", {true, true, true, false}},
        {"Full", {true, true, true, true}},
    };
    return ladder;
}

std::string ablation_label(const AblationConfig& flags)
{
    for (const auto& step : ablation_ladder()) {
        if (step.flags == flags) {
            return step.label;
        }
    }
    return "Custom";
}

}  // namespace iotllm
