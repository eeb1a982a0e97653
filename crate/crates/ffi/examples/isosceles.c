/* Builds a model from three passing runs of isIsosceles and diffs the
 * failing one. Exits 0 when exactly one invariant is invalidated. */
#include <stdio.h>
#include <stdlib.h>

#include "carrot.h"

static const char *SRC =
    "fn isIsosceles(x, y, z) {\n"
    "  if (x == y) { return 1; } else {\n"
    "    if (y == z) { return 1; } else { return 0; }\n"
    "  }\n"
    "}\n";

static int check(CarrotStatus s, const char *what) {
    if (s != CARROT_OK) {
        fprintf(stderr, "%s: %d %s\n", what, (int)s, carrot_last_error());
        exit(1);
    }
    return 0;
}

int main(void) {
    CarrotProgram *prog = NULL;
    check(carrot_program_parse(SRC, &prog), "parse");

    CarrotConfig cfg = carrot_config_default();
    cfg.schemata = CARROT_SCHEMA_LESS_THAN;
    cfg.value_sets = false;
    cfg.pair_sets = false;
    cfg.points = CARROT_POINTS_ENTRY;

    int64_t inputs[4][3] = {{1, 2, 3}, {2, 5, 5}, {2, 2, 3}, {2, 3, 2}};
    CarrotSpectrum *spectra[4];
    for (int i = 0; i < 4; i++) {
        char id[16];
        snprintf(id, sizeof id, "run_%d", i + 1);
        CarrotTrace *trace = NULL;
        int64_t result = 0;
        check(carrot_program_run(prog, NULL, inputs[i], 3, id, &result, &trace), "run");
        check(carrot_spectrum_compute(trace, &cfg, &spectra[i]), "spectrum");
        carrot_trace_free(trace);
    }

    CarrotModel *model = NULL;
    check(carrot_model_build((const CarrotSpectrum *const *)spectra, 3, &model), "model");
    CarrotReport *report = NULL;
    check(carrot_diff(model, spectra[3], &report), "diff");

    char *text = NULL;
    check(carrot_report_render(report, CARROT_FORMAT_TEXT, &text), "render");
    fputs(text, stdout);
    size_t n = carrot_report_invalidated_count(report);

    carrot_string_free(text);
    carrot_report_free(report);
    carrot_model_free(model);
    for (int i = 0; i < 4; i++) carrot_spectrum_free(spectra[i]);
    carrot_program_free(prog);
    return n == 1 ? 0 : 2;
}
