#pragma once

#include "robustz/assignment.hpp"
#include "robustz/data_io.hpp"
#include "robustz/error.hpp"
#include "robustz/greedy.hpp"
#include "robustz/matching.hpp"
#include "robustz/oracle.hpp"
#include "robustz/orchestrator.hpp"
#include "robustz/qip_export.hpp"
#include "robustz/report.hpp"
#include "robustz/statistic.hpp"
#include "robustz/types.hpp"
