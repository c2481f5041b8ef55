#pragma once

// Umbrella header: the whole library in dependency order.

#include "lawreason/text.hpp"
#include "lawreason/rouge.hpp"
#include "lawreason/schema.hpp"
#include "lawreason/corpus.hpp"
#include "lawreason/metrics.hpp"
#include "lawreason/llm.hpp"
#include "lawreason/prompts.hpp"
#include "lawreason/vectorstore.hpp"
#include "lawreason/agent.hpp"
#include "lawreason/toolkits.hpp"
#include "lawreason/harness.hpp"
