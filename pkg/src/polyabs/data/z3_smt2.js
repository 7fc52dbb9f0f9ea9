#!/usr/bin/env node
// Minimal SMT-LIB2 front end for the z3-solver npm package (wasm build).
// Reads a full script from stdin, prints the solver output to stdout.
// Process-level timeouts are the caller's job.

"use strict";

let input = "";
process.stdin.setEncoding("utf8");
process.stdin.on("data", chunk => { input += chunk; });
process.stdin.on("end", async () => {
  let init;
  try {
    ({ init } = require("z3-solver"));
  } catch (err) {
    process.stderr.write("z3-solver npm package not resolvable: " + err + "\n");
    process.exit(2);
  }
  try {
    const { Z3 } = await init();
    const ctx = Z3.mk_context(Z3.mk_config());
    const out = await Z3.eval_smtlib2_string(ctx, input);
    process.stdout.write(out);
    process.exit(0);
  } catch (err) {
    process.stderr.write("solver failure: " + err + "\n");
    process.exit(3);
  }
});
