#pragma once

#include "psd/models.hpp"

#include <string>
#include <string_view>

namespace psd {

// Flag-encoded backend descriptions, shared by the CLI and sweep configs:
//
//   kind:key=value,key=value,...
//
//   table:vocab=64,seed=1,order=2,scale=6,latency=0.01
//   ngram:corpus=data.txt,order=3,k=0.5,latency=0.002
//   trace:path=run.trace,latency=0.01
//   remote:url=http://127.0.0.1:8080,model=m,vocab=64,latency=0.05
//
// Common keys on every kind: name=, latency= (with_latency wrap, seconds),
// temp= (temperature_wrap). Unknown keys are errors.
backend_ptr parse_backend_spec(std::string_view spec);

// vocabulary the spec'd backend was built over; for ngram backends this is
// the corpus vocabulary with word lookups available, otherwise numeric.
struct parsed_backend {
    backend_ptr backend;
    vocabulary vocab;
};

parsed_backend parse_backend_spec_with_vocab(std::string_view spec);

// whitespace-splits a text file; every line becomes one token sequence over a
// vocabulary of the distinct words, ids assigned in lexicographic order
std::pair<vocabulary, std::vector<context>> load_text_corpus(const std::string& path);

} // namespace psd
