#pragma once

// Umbrella header (everything except the HTTP pieces, which pull in httplib).
#include "toolplay/config.hpp"
#include "toolplay/curate.hpp"
#include "toolplay/errors.hpp"
#include "toolplay/eval.hpp"
#include "toolplay/gateway.hpp"
#include "toolplay/genreward.hpp"
#include "toolplay/hash.hpp"
#include "toolplay/parse.hpp"
#include "toolplay/prompts.hpp"
#include "toolplay/relaxed_json.hpp"
#include "toolplay/rng.hpp"
#include "toolplay/selfplay.hpp"
#include "toolplay/service.hpp"
#include "toolplay/solreward.hpp"
#include "toolplay/taskspec.hpp"
#include "toolplay/tool.hpp"
#include "toolplay/values.hpp"
