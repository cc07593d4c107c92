#pragma once

// Umbrella header for the hand-hygiene monitoring toolkit: the controller
// state machine, doorway direction detection, the scenario simulator, the
// telemetry wire format with its durable outbox and MQTT publisher, and
// the event-sourced ingest service.

#include "hh/clock.hpp"
#include "hh/config.hpp"
#include "hh/controller.hpp"
#include "hh/counters.hpp"
#include "hh/detector.hpp"
#include "hh/events.hpp"
#include "hh/framing.hpp"
#include "hh/http_api.hpp"
#include "hh/ingest.hpp"
#include "hh/mqtt.hpp"
#include "hh/outbox.hpp"
#include "hh/publisher.hpp"
#include "hh/report.hpp"
#include "hh/scenario.hpp"
#include "hh/simulator.hpp"
#include "hh/trace.hpp"
#include "hh/util.hpp"
#include "hh/wire.hpp"
