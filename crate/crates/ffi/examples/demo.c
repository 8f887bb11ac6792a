/* Build the library, then:
 *   cc -Icrates/ffi/include crates/ffi/examples/demo.c target/release/libgdarb_ffi.a -lm -lpthread -ldl -o demo
 */
#include <stdio.h>
#include "gdarb.h"

static int report(GdarbStatus st) {
    char *msg = gdarb_last_error();
    fprintf(stderr, "%s: %s\n", gdarb_status_name(st), msg ? msg : "");
    gdarb_string_free(msg);
    return 1;
}

int main(void) {
    const char *keys[] = {"xi", "rho"};
    const double values[] = {2.0, 3.0};
    GdarbModel *m = NULL;
    GdarbStatus st = gdarb_model_from_catalog("bachelier-sticky", keys, values, 2, &m);
    if (st != GDARB_STATUS_OK) return report(st);

    GdarbVerdicts v;
    if ((st = gdarb_model_verdicts(m, &v)) != GDARB_STATUS_OK) return report(st);
    printf("nip=%d qvip=%d rp=%d\n", v.nip, v.qvip_exists, v.rp_holds);

    double loc[8], mass[8];
    size_t n = 0;
    if ((st = gdarb_model_nu_atoms(m, loc, mass, 8, &n)) != GDARB_STATUS_OK) return report(st);
    for (size_t i = 0; i < n && i < 8; i++) printf("atom %.17g at %.17g\n", mass[i], loc[i]);

    GdarbMcConfig cfg = gdarb_mc_config_default();
    cfg.n_paths = 500;
    cfg.h = 0.02;
    GdarbIpReport r;
    if ((st = gdarb_model_backtest(m, GDARB_STRATEGY_THETA, &cfg, &r)) != GDARB_STATUS_OK) return report(st);
    printf("theta verdict=%d p_positive=%.4f monotone=%.4f\n", (int)r.verdict, r.p_positive, r.monotone_fraction);

    gdarb_model_free(m);
    return r.verdict == GDARB_VERDICT_INCREASING_PROFIT ? 0 : 1;
}
