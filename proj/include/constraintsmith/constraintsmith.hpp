#pragma once

// Core pipeline: constraint spec -> regex -> automaton -> token index ->
// guided decoding. The HTTP pieces live in remote_scorer.hpp and
// service.hpp and additionally need cpp-httplib.

#include "constraintsmith/automaton.hpp"
#include "constraintsmith/constraint_model.hpp"
#include "constraintsmith/decoder.hpp"
#include "constraintsmith/errors.hpp"
#include "constraintsmith/regex_ast.hpp"
#include "constraintsmith/regex_compiler.hpp"
#include "constraintsmith/regex_parser.hpp"
#include "constraintsmith/token_index.hpp"
#include "constraintsmith/vocabulary.hpp"
