#pragma once

#include "biopsim/json_util.hpp"
#include "biopsim/simkit.hpp"

namespace biopsim {

Json plan_to_json(const ExperimentPlan& plan);
/// Missing members keep their defaults. Throws BadInput.
ExperimentPlan plan_from_json(const Json& j);

Json operator_to_json(const OperatorModel& op);
OperatorModel operator_from_json(const Json& j);

Json coverage_to_json(const CoverageReport& c);

/// Session score record: {mode, operator_id, biopsies[12], coverage}.
Json session_to_json(const SessionRecord& s);

/// {format, toolkit_version, plan, operators, sessions}.
Json dataset_to_json(const ExperimentDataset& ds);
/// Reads back what compare_modes needs. Throws BadInput on malformed input.
ExperimentDataset dataset_from_json(const Json& j);

}  // namespace biopsim
