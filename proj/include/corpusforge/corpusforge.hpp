#pragma once

#include "corpusforge/catalog.hpp"
#include "corpusforge/dataset_layout.hpp"
#include "corpusforge/error.hpp"
#include "corpusforge/eval/chrf.hpp"
#include "corpusforge/eval/urls.hpp"
#include "corpusforge/eval/variants.hpp"
#include "corpusforge/filters/batch.hpp"
#include "corpusforge/filters/builtin.hpp"
#include "corpusforge/filters/dedupe.hpp"
#include "corpusforge/filters/definition.hpp"
#include "corpusforge/filters/pipeline.hpp"
#include "corpusforge/filters/sample.hpp"
#include "corpusforge/io.hpp"
#include "corpusforge/modifiers/chain.hpp"
#include "corpusforge/rng.hpp"
#include "corpusforge/scheduler/scheduler.hpp"
#include "corpusforge/sentence_pair.hpp"
#include "corpusforge/service.hpp"
