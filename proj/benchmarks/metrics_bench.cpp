#include <benchmark/benchmark.h>

#include "planguard/evaluation.hpp"

namespace {

planguard::Action make_action(int i) {
    planguard::Action a;
    a.tool = "Tool" + std::to_string(i % 5);
    a.input = planguard::Document{{"k", i % 7}};
    return a;
}

void BM_CorrectSteps(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    planguard::Trajectory t;
    std::vector<planguard::Action> gt;
    for (int i = 0; i < n; ++i) {
        planguard::Step s;
        s.index = i;
        s.action = make_action(i);
        t.steps.push_back(s);
        gt.push_back(make_action(n - i));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(planguard::correct_steps(t, gt));
    }
}

void BM_Canonicalize(benchmark::State& state) {
    planguard::Document d;
    for (int i = 0; i < 32; ++i) {
        d["field_" + std::to_string(i)] =
            planguard::Document{{"n", i}, {"s", "value"}, {"f", i / 3.0}};
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(planguard::canonicalize(d));
    }
}

}  // namespace

BENCHMARK(BM_CorrectSteps)->Arg(8)->Arg(64);
BENCHMARK(BM_Canonicalize);
