//! Deterministic synthetic corpus of functionally equivalent IR snippets.
//!
//! Eight small integer programs (problems), each rendered in eight variants
//! that keep the semantics but vary the surface: register and label naming
//! schemes, mirrored comparisons, reordered independent instructions,
//! redundant parameter copies, and structural rewrites such as branch-based
//! versus `select`-based conditionals. Variants of the same problem are
//! Type-4 clones of each other; snippets from different problems are not.
//!
//! Generation is a pure function of the seed, so the bundled corpus can be
//! reproduced byte for byte.

use std::collections::BTreeSet;
use std::io;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// How many problems/variants to emit and the master seed.
#[derive(Debug, Clone, Copy)]
pub struct SynthSpec {
    pub problems: usize,
    pub variants: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec { problems: 8, variants: 8, seed: 7 }
    }
}

/// One generated snippet: problem directory, file name, IR text.
#[derive(Debug, Clone)]
pub struct SynthSnippet {
    pub problem: String,
    pub file: String,
    pub text: String,
}

/// Surface choices applied to a template.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Style {
    /// Register naming scheme (0 = semantic names).
    reg_mode: usize,
    /// Label naming scheme (0 = semantic names).
    label_mode: usize,
    /// Template-specific structural rewrite.
    tweak: usize,
    /// Mirror comparisons (`a < b` becomes `b > a`).
    flip_cmp: bool,
    /// Route one parameter through a redundant `add .., 0` copy.
    redundant: bool,
    /// Swap the order of independent phi nodes.
    swap_phis: bool,
}

impl Style {
    fn reg(&self, sem: &str, ord: usize) -> String {
        match self.reg_mode {
            0 => format!("%{sem}"),
            1 => format!("%t{ord}"),
            2 => format!("%x.{ord}"),
            _ => format!("%val{ord}"),
        }
    }

    fn param(&self, sem: &str, idx: usize) -> String {
        match self.reg_mode {
            1 => format!("%arg{idx}"),
            2 => format!("%a{idx}"),
            _ => format!("%{sem}"),
        }
    }

    fn label(&self, sem: &str, ord: usize) -> String {
        match self.label_mode {
            0 => sem.to_string(),
            1 => format!("bb{ord}"),
            2 => format!("L{ord}"),
            _ => format!("blk{ord}"),
        }
    }

    /// Render an `icmp`, mirroring predicate and operands when flipped.
    fn cmp(&self, pred: &str, ty: &str, lhs: &str, rhs: &str) -> String {
        if self.flip_cmp {
            format!("icmp {} {ty} {rhs}, {lhs}", mirror(pred))
        } else {
            format!("icmp {pred} {ty} {lhs}, {rhs}")
        }
    }
}

fn mirror(pred: &str) -> &str {
    match pred {
        "slt" => "sgt",
        "sgt" => "slt",
        "sle" => "sge",
        "sge" => "sle",
        "ult" => "ugt",
        "ugt" => "ult",
        other => other, // eq and ne are symmetric
    }
}

/// Emit two phi lines, honoring the swap knob.
fn phi_pair(s: &Style, first: String, second: String) -> [String; 2] {
    if s.swap_phis {
        [second, first]
    } else {
        [first, second]
    }
}

// --- templates --------------------------------------------------------------
//
// Every template returns a full `define` for `@main`. Register ordinals are
// assigned in order of first definition so numbered naming schemes read
// naturally.

/// Sum of 1..=n.
fn t_sum(s: &Style) -> String {
    let n = s.param("n", 0);
    let entry = s.label("entry", 0);
    let lp = s.label("loop", 1);
    let exit = s.label("exit", 2);
    let i = s.reg("i", 0);
    let acc = s.reg("acc", 1);
    let accn = s.reg("acc.next", 2);
    let inx = s.reg("i.next", 3);
    let cmp = s.reg("cmp", 4);

    let mut head = Vec::new();
    let n_eff = if s.redundant {
        let c = s.reg("n.copy", 5);
        head.push(format!("  {c} = add i32 {n}, 0"));
        c
    } else {
        n.clone()
    };

    let (phis, accn_line, step, cmp_line) = match s.tweak {
        // Count down from n.
        1 => (
            phi_pair(
                s,
                format!("  {i} = phi i32 [ {n_eff}, %{entry} ], [ {inx}, %{lp} ]"),
                format!("  {acc} = phi i32 [ 0, %{entry} ], [ {accn}, %{lp} ]"),
            ),
            format!("  {accn} = add i32 {acc}, {i}"),
            format!("  {inx} = sub i32 {i}, 1"),
            format!("  {cmp} = {}", s.cmp("sgt", "i32", &i, "1")),
        ),
        // Count up, test the incremented counter.
        2 => (
            phi_pair(
                s,
                format!("  {i} = phi i32 [ 1, %{entry} ], [ {inx}, %{lp} ]"),
                format!("  {acc} = phi i32 [ 0, %{entry} ], [ {accn}, %{lp} ]"),
            ),
            format!("  {accn} = add i32 {i}, {acc}"),
            format!("  {inx} = add i32 {i}, 1"),
            format!("  {cmp} = {}", s.cmp("sle", "i32", &inx, &n_eff)),
        ),
        // Count up, test the old counter.
        _ => (
            phi_pair(
                s,
                format!("  {i} = phi i32 [ 1, %{entry} ], [ {inx}, %{lp} ]"),
                format!("  {acc} = phi i32 [ 0, %{entry} ], [ {accn}, %{lp} ]"),
            ),
            format!("  {accn} = add i32 {acc}, {i}"),
            format!("  {inx} = add i32 {i}, 1"),
            format!("  {cmp} = {}", s.cmp("slt", "i32", &i, &n_eff)),
        ),
    };

    let mut out = vec![format!("define i32 @main(i32 {n}) {{"), format!("{entry}:")];
    out.extend(head);
    out.push(format!("  br label %{lp}"));
    out.push(format!("{lp}:"));
    out.extend(phis);
    out.push(accn_line);
    out.push(step);
    out.push(cmp_line);
    out.push(format!("  br i1 {cmp}, label %{lp}, label %{exit}"));
    out.push(format!("{exit}:"));
    out.push(format!("  ret i32 {accn}"));
    out.push("}".to_string());
    out.join("\n") + "\n"
}

/// n factorial.
fn t_factorial(s: &Style) -> String {
    let n = s.param("n", 0);
    let entry = s.label("entry", 0);
    let lp = s.label("loop", 1);
    let exit = s.label("exit", 2);
    let i = s.reg("i", 0);
    let acc = s.reg("acc", 1);
    let accn = s.reg("acc.next", 2);
    let inx = s.reg("i.next", 3);
    let cmp = s.reg("cmp", 4);

    let mut head = Vec::new();
    let n_eff = if s.redundant {
        let c = s.reg("n.copy", 5);
        head.push(format!("  {c} = add i32 {n}, 0"));
        c
    } else {
        n.clone()
    };

    let (phis, mul_line, step, cmp_line) = match s.tweak {
        // Multiply counting down.
        1 => (
            phi_pair(
                s,
                format!("  {i} = phi i32 [ {n_eff}, %{entry} ], [ {inx}, %{lp} ]"),
                format!("  {acc} = phi i32 [ 1, %{entry} ], [ {accn}, %{lp} ]"),
            ),
            format!("  {accn} = mul i32 {acc}, {i}"),
            format!("  {inx} = sub i32 {i}, 1"),
            format!("  {cmp} = {}", s.cmp("sgt", "i32", &inx, "1")),
        ),
        // Start at 1 with swapped multiply operands.
        2 => (
            phi_pair(
                s,
                format!("  {i} = phi i32 [ 1, %{entry} ], [ {inx}, %{lp} ]"),
                format!("  {acc} = phi i32 [ 1, %{entry} ], [ {accn}, %{lp} ]"),
            ),
            format!("  {accn} = mul i32 {i}, {acc}"),
            format!("  {inx} = add i32 {i}, 1"),
            format!("  {cmp} = {}", s.cmp("sle", "i32", &inx, &n_eff)),
        ),
        // Start at 2, since multiplying by 1 is a no-op.
        _ => (
            phi_pair(
                s,
                format!("  {i} = phi i32 [ 2, %{entry} ], [ {inx}, %{lp} ]"),
                format!("  {acc} = phi i32 [ 1, %{entry} ], [ {accn}, %{lp} ]"),
            ),
            format!("  {accn} = mul i32 {acc}, {i}"),
            format!("  {inx} = add i32 {i}, 1"),
            format!("  {cmp} = {}", s.cmp("sle", "i32", &inx, &n_eff)),
        ),
    };

    let mut out = vec![format!("define i32 @main(i32 {n}) {{"), format!("{entry}:")];
    out.extend(head);
    out.push(format!("  br label %{lp}"));
    out.push(format!("{lp}:"));
    out.extend(phis);
    out.push(mul_line);
    out.push(step);
    out.push(cmp_line);
    out.push(format!("  br i1 {cmp}, label %{lp}, label %{exit}"));
    out.push(format!("{exit}:"));
    out.push(format!("  ret i32 {accn}"));
    out.push("}".to_string());
    out.join("\n") + "\n"
}

/// Maximum element of an array.
fn t_array_max(s: &Style) -> String {
    let a = s.param("a", 0);
    let len = s.param("len", 1);
    let entry = s.label("entry", 0);
    let lp = s.label("loop", 1);
    let body = s.label("body", 2);
    let take = s.label("take", 3);
    let latch = s.label("latch", 4);
    let exit = s.label("exit", 5);
    let first = s.reg("first", 0);
    let i = s.reg("i", 1);
    let best = s.reg("best", 2);
    let done = s.reg("done", 3);
    let slot = s.reg("slot", 4);
    let x = s.reg("x", 5);
    let cond = s.reg("cond", 6);
    let bestn = s.reg("best.next", 7);
    let inx = s.reg("i.next", 8);

    let mut head = vec![format!("  {first} = load i32, ptr {a}")];
    let len_eff = if s.redundant {
        let c = s.reg("len.copy", 9);
        head.push(format!("  {c} = add i32 {len}, 0"));
        c
    } else {
        len.clone()
    };

    // Block the loop phis take their back-edge values from.
    let back = if s.tweak == 0 { latch.clone() } else { body.clone() };
    let mut out = vec![format!("define i32 @main(ptr {a}, i32 {len}) {{"), format!("{entry}:")];
    out.extend(head);
    out.push(format!("  br label %{lp}"));
    out.push(format!("{lp}:"));
    out.extend(phi_pair(
        s,
        format!("  {i} = phi i32 [ 1, %{entry} ], [ {inx}, %{back} ]"),
        format!("  {best} = phi i32 [ {first}, %{entry} ], [ {bestn}, %{back} ]"),
    ));
    out.push(format!("  {done} = {}", s.cmp("sge", "i32", &i, &len_eff)));
    out.push(format!("  br i1 {done}, label %{exit}, label %{body}"));
    out.push(format!("{body}:"));
    out.push(format!("  {slot} = getelementptr i32, ptr {a}, i32 {i}"));
    out.push(format!("  {x} = load i32, ptr {slot}"));
    match s.tweak {
        // Pick the new best with a select.
        1 => {
            out.push(format!("  {cond} = {}", s.cmp("sgt", "i32", &x, &best)));
            out.push(format!("  {bestn} = select i1 {cond}, i32 {x}, i32 {best}"));
            out.push(format!("  {inx} = add i32 {i}, 1"));
            out.push(format!("  br label %{lp}"));
        }
        // Same select, comparison stated the other way round.
        2 => {
            out.push(format!("  {cond} = {}", s.cmp("slt", "i32", &best, &x)));
            out.push(format!("  {bestn} = select i1 {cond}, i32 {x}, i32 {best}"));
            out.push(format!("  {inx} = add i32 {i}, 1"));
            out.push(format!("  br label %{lp}"));
        }
        // Branch to a latch that merges the candidates.
        _ => {
            out.push(format!("  {cond} = {}", s.cmp("sgt", "i32", &x, &best)));
            out.push(format!("  br i1 {cond}, label %{take}, label %{latch}"));
            out.push(format!("{take}:"));
            out.push(format!("  br label %{latch}"));
            out.push(format!("{latch}:"));
            out.push(format!("  {bestn} = phi i32 [ {x}, %{take} ], [ {best}, %{body} ]"));
            out.push(format!("  {inx} = add i32 {i}, 1"));
            out.push(format!("  br label %{lp}"));
        }
    }
    out.push(format!("{exit}:"));
    out.push(format!("  ret i32 {best}"));
    out.push("}".to_string());
    out.join("\n") + "\n"
}

/// Count even elements of an array.
fn t_count_even(s: &Style) -> String {
    let a = s.param("a", 0);
    let len = s.param("len", 1);
    let entry = s.label("entry", 0);
    let lp = s.label("loop", 1);
    let body = s.label("body", 2);
    let inc = s.label("inc", 3);
    let latch = s.label("latch", 4);
    let exit = s.label("exit", 5);
    let i = s.reg("i", 0);
    let count = s.reg("count", 1);
    let done = s.reg("done", 2);
    let slot = s.reg("slot", 3);
    let x = s.reg("x", 4);
    let rem = s.reg("rem", 5);
    let parity = s.reg("parity", 6);
    let countn = s.reg("count.next", 7);
    let inx = s.reg("i.next", 8);
    let extra = s.reg("bump", 9);

    let mut head = Vec::new();
    let len_eff = if s.redundant {
        let c = s.reg("len.copy", 10);
        head.push(format!("  {c} = add i32 {len}, 0"));
        c
    } else {
        len.clone()
    };

    let back = if s.tweak == 1 { latch.clone() } else { body.clone() };
    let mut out = vec![format!("define i32 @main(ptr {a}, i32 {len}) {{"), format!("{entry}:")];
    out.extend(head);
    out.push(format!("  br label %{lp}"));
    out.push(format!("{lp}:"));
    out.extend(phi_pair(
        s,
        format!("  {i} = phi i32 [ 0, %{entry} ], [ {inx}, %{back} ]"),
        format!("  {count} = phi i32 [ 0, %{entry} ], [ {countn}, %{back} ]"),
    ));
    out.push(format!("  {done} = {}", s.cmp("eq", "i32", &i, &len_eff)));
    out.push(format!("  br i1 {done}, label %{exit}, label %{body}"));
    out.push(format!("{body}:"));
    out.push(format!("  {slot} = getelementptr i32, ptr {a}, i32 {i}"));
    out.push(format!("  {x} = load i32, ptr {slot}"));
    out.push(format!("  {rem} = srem i32 {x}, 2"));
    match s.tweak {
        // Branch around the increment.
        1 => {
            out.push(format!("  {parity} = {}", s.cmp("eq", "i32", &rem, "0")));
            out.push(format!("  br i1 {parity}, label %{inc}, label %{latch}"));
            out.push(format!("{inc}:"));
            out.push(format!("  {extra} = add i32 {count}, 1"));
            out.push(format!("  br label %{latch}"));
            out.push(format!("{latch}:"));
            out.push(format!(
                "  {countn} = phi i32 [ {extra}, %{inc} ], [ {count}, %{body} ]"
            ));
            out.push(format!("  {inx} = add i32 {i}, 1"));
            out.push(format!("  br label %{lp}"));
        }
        // Select between the old and bumped count.
        2 => {
            out.push(format!("  {extra} = add i32 {count}, 1"));
            out.push(format!("  {parity} = {}", s.cmp("ne", "i32", &rem, "0")));
            out.push(format!(
                "  {countn} = select i1 {parity}, i32 {count}, i32 {extra}"
            ));
            out.push(format!("  {inx} = add i32 {i}, 1"));
            out.push(format!("  br label %{lp}"));
        }
        // Widen the comparison bit and add it.
        _ => {
            out.push(format!("  {parity} = {}", s.cmp("eq", "i32", &rem, "0")));
            out.push(format!("  {extra} = zext i1 {parity} to i32"));
            out.push(format!("  {countn} = add i32 {count}, {extra}"));
            out.push(format!("  {inx} = add i32 {i}, 1"));
            out.push(format!("  br label %{lp}"));
        }
    }
    out.push(format!("{exit}:"));
    out.push(format!("  ret i32 {count}"));
    out.push("}".to_string());
    out.join("\n") + "\n"
}

/// n-th Fibonacci number.
fn t_fib(s: &Style) -> String {
    let n = s.param("n", 0);
    let entry = s.label("entry", 0);
    let lp = s.label("loop", 1);
    let exit = s.label("exit", 2);
    let i = s.reg("i", 0);
    let a = s.reg("a", 1);
    let b = s.reg("b", 2);
    let sum = s.reg("sum", 3);
    let inx = s.reg("i.next", 4);
    let cmp = s.reg("cmp", 5);

    let mut head = Vec::new();
    let n_eff = if s.redundant {
        let c = s.reg("n.copy", 6);
        head.push(format!("  {c} = add i32 {n}, 0"));
        c
    } else {
        n.clone()
    };

    let (sum_line, cmp_line) = match s.tweak {
        1 => (
            format!("  {sum} = add i32 {b}, {a}"),
            format!("  {cmp} = {}", s.cmp("ne", "i32", &inx, &n_eff)),
        ),
        2 => (
            format!("  {sum} = add i32 {a}, {b}"),
            format!("  {cmp} = {}", s.cmp("sle", "i32", &inx, &n_eff)),
        ),
        _ => (
            format!("  {sum} = add i32 {a}, {b}"),
            format!("  {cmp} = {}", s.cmp("slt", "i32", &inx, &n_eff)),
        ),
    };

    let mut out = vec![format!("define i32 @main(i32 {n}) {{"), format!("{entry}:")];
    out.extend(head);
    out.push(format!("  br label %{lp}"));
    out.push(format!("{lp}:"));
    out.push(format!("  {i} = phi i32 [ 0, %{entry} ], [ {inx}, %{lp} ]"));
    out.extend(phi_pair(
        s,
        format!("  {a} = phi i32 [ 0, %{entry} ], [ {b}, %{lp} ]"),
        format!("  {b} = phi i32 [ 1, %{entry} ], [ {sum}, %{lp} ]"),
    ));
    out.push(sum_line);
    out.push(format!("  {inx} = add i32 {i}, 1"));
    out.push(cmp_line);
    out.push(format!("  br i1 {cmp}, label %{lp}, label %{exit}"));
    out.push(format!("{exit}:"));
    out.push(format!("  ret i32 {sum}"));
    out.push("}".to_string());
    out.join("\n") + "\n"
}

/// Absolute difference of two integers.
fn t_abs_diff(s: &Style) -> String {
    let a = s.param("a", 0);
    let b = s.param("b", 1);
    let entry = s.label("entry", 0);
    let flip = s.label("flip", 1);
    let keep = s.label("keep", 2);
    let join = s.label("join", 3);
    let d1 = s.reg("d1", 0);
    let d2 = s.reg("d2", 1);
    let cond = s.reg("cond", 2);
    let res = s.reg("res", 3);

    let mut out = vec![format!("define i32 @main(i32 {a}, i32 {b}) {{"), format!("{entry}:")];
    let a_eff = if s.redundant {
        let c = s.reg("a.copy", 4);
        out.push(format!("  {c} = add i32 {a}, 0"));
        c
    } else {
        a.clone()
    };
    match s.tweak {
        // Compute both differences, pick with a select.
        1 => {
            out.push(format!("  {d1} = sub i32 {b}, {a_eff}"));
            out.push(format!("  {d2} = sub i32 {a_eff}, {b}"));
            out.push(format!("  {cond} = {}", s.cmp("slt", "i32", &a_eff, &b)));
            out.push(format!("  {res} = select i1 {cond}, i32 {d1}, i32 {d2}"));
            out.push(format!("  ret i32 {res}"));
        }
        // Same, asking whether b is the larger one.
        2 => {
            out.push(format!("  {d2} = sub i32 {a_eff}, {b}"));
            out.push(format!("  {d1} = sub i32 {b}, {a_eff}"));
            out.push(format!("  {cond} = {}", s.cmp("sgt", "i32", &b, &a_eff)));
            out.push(format!("  {res} = select i1 {cond}, i32 {d1}, i32 {d2}"));
            out.push(format!("  ret i32 {res}"));
        }
        // Classic diamond.
        _ => {
            out.push(format!("  {cond} = {}", s.cmp("slt", "i32", &a_eff, &b)));
            out.push(format!("  br i1 {cond}, label %{flip}, label %{keep}"));
            out.push(format!("{flip}:"));
            out.push(format!("  {d1} = sub i32 {b}, {a_eff}"));
            out.push(format!("  br label %{join}"));
            out.push(format!("{keep}:"));
            out.push(format!("  {d2} = sub i32 {a_eff}, {b}"));
            out.push(format!("  br label %{join}"));
            out.push(format!("{join}:"));
            out.push(format!("  {res} = phi i32 [ {d1}, %{flip} ], [ {d2}, %{keep} ]"));
            out.push(format!("  ret i32 {res}"));
        }
    }
    out.push("}".to_string());
    out.join("\n") + "\n"
}

/// Greatest common divisor by repeated remainder.
fn t_gcd(s: &Style) -> String {
    let a = s.param("a", 0);
    let b = s.param("b", 1);
    let entry = s.label("entry", 0);
    let lp = s.label("loop", 1);
    let body = s.label("body", 2);
    let latch = s.label("latch", 3);
    let exit = s.label("exit", 4);
    let x = s.reg("x", 0);
    let y = s.reg("y", 1);
    let done = s.reg("done", 2);
    let r = s.reg("r", 3);

    let mut out = vec![format!("define i32 @main(i32 {a}, i32 {b}) {{"), format!("{entry}:")];
    let a_eff = if s.redundant {
        let c = s.reg("a.copy", 4);
        out.push(format!("  {c} = add i32 {a}, 0"));
        c
    } else {
        a.clone()
    };
    out.push(format!("  br label %{lp}"));
    out.push(format!("{lp}:"));
    let back = if s.tweak == 2 { latch.clone() } else { body.clone() };
    out.extend(phi_pair(
        s,
        format!("  {x} = phi i32 [ {a_eff}, %{entry} ], [ {y}, %{back} ]"),
        format!("  {y} = phi i32 [ {b}, %{entry} ], [ {r}, %{back} ]"),
    ));
    match s.tweak {
        // Ask "still running?" instead of "finished?".
        1 => {
            out.push(format!("  {done} = {}", s.cmp("ne", "i32", &y, "0")));
            out.push(format!("  br i1 {done}, label %{body}, label %{exit}"));
        }
        _ => {
            out.push(format!("  {done} = {}", s.cmp("eq", "i32", &y, "0")));
            out.push(format!("  br i1 {done}, label %{exit}, label %{body}"));
        }
    }
    out.push(format!("{body}:"));
    out.push(format!("  {r} = srem i32 {x}, {y}"));
    if s.tweak == 2 {
        out.push(format!("  br label %{latch}"));
        out.push(format!("{latch}:"));
    }
    out.push(format!("  br label %{lp}"));
    out.push(format!("{exit}:"));
    out.push(format!("  ret i32 {x}"));
    out.push("}".to_string());
    out.join("\n") + "\n"
}

/// Dot product of two arrays.
fn t_dot(s: &Style) -> String {
    let p = s.param("p", 0);
    let q = s.param("q", 1);
    let len = s.param("len", 2);
    let entry = s.label("entry", 0);
    let lp = s.label("loop", 1);
    let body = s.label("body", 2);
    let exit = s.label("exit", 3);
    let i = s.reg("i", 0);
    let acc = s.reg("acc", 1);
    let done = s.reg("done", 2);
    let pa = s.reg("pa", 3);
    let qa = s.reg("qa", 4);
    let xa = s.reg("xa", 5);
    let xb = s.reg("xb", 6);
    let prod = s.reg("prod", 7);
    let accn = s.reg("acc.next", 8);
    let inx = s.reg("i.next", 9);

    let mut head = Vec::new();
    let len_eff = if s.redundant {
        let c = s.reg("len.copy", 10);
        head.push(format!("  {c} = add i32 {len}, 0"));
        c
    } else {
        len.clone()
    };

    let mut out =
        vec![format!("define i32 @main(ptr {p}, ptr {q}, i32 {len}) {{"), format!("{entry}:")];
    out.extend(head);
    out.push(format!("  br label %{lp}"));
    out.push(format!("{lp}:"));
    out.extend(phi_pair(
        s,
        format!("  {i} = phi i32 [ 0, %{entry} ], [ {inx}, %{body} ]"),
        format!("  {acc} = phi i32 [ 0, %{entry} ], [ {accn}, %{body} ]"),
    ));
    let done_line = match s.tweak {
        2 => format!("  {done} = {}", s.cmp("eq", "i32", &i, &len_eff)),
        _ => format!("  {done} = {}", s.cmp("sge", "i32", &i, &len_eff)),
    };
    out.push(done_line);
    out.push(format!("  br i1 {done}, label %{exit}, label %{body}"));
    out.push(format!("{body}:"));
    if s.tweak == 1 {
        // Interleave the address/load pairs.
        out.push(format!("  {pa} = getelementptr i32, ptr {p}, i32 {i}"));
        out.push(format!("  {xa} = load i32, ptr {pa}"));
        out.push(format!("  {qa} = getelementptr i32, ptr {q}, i32 {i}"));
        out.push(format!("  {xb} = load i32, ptr {qa}"));
    } else {
        out.push(format!("  {pa} = getelementptr i32, ptr {p}, i32 {i}"));
        out.push(format!("  {qa} = getelementptr i32, ptr {q}, i32 {i}"));
        out.push(format!("  {xa} = load i32, ptr {pa}"));
        out.push(format!("  {xb} = load i32, ptr {qa}"));
    }
    if s.tweak == 2 {
        out.push(format!("  {prod} = mul i32 {xb}, {xa}"));
        out.push(format!("  {accn} = add i32 {prod}, {acc}"));
    } else {
        out.push(format!("  {prod} = mul i32 {xa}, {xb}"));
        out.push(format!("  {accn} = add i32 {acc}, {prod}"));
    }
    out.push(format!("  {inx} = add i32 {i}, 1"));
    out.push(format!("  br label %{lp}"));
    out.push(format!("{exit}:"));
    out.push(format!("  ret i32 {acc}"));
    out.push("}".to_string());
    out.join("\n") + "\n"
}

const TEMPLATES: &[fn(&Style) -> String] =
    &[t_sum, t_factorial, t_array_max, t_count_even, t_fib, t_abs_diff, t_gcd, t_dot];

fn style_for(seed: u64, problem: usize, variant: usize, salt: u64) -> Style {
    if variant == 0 && salt == 0 {
        // The first variant is always the canonical form.
        return Style::default();
    }
    let mix = seed
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add((problem as u64) << 16)
        .wrapping_add((variant as u64) << 8)
        .wrapping_add(salt);
    let mut rng = ChaCha8Rng::seed_from_u64(mix);
    Style {
        reg_mode: rng.gen_range(0..4),
        label_mode: rng.gen_range(0..4),
        tweak: rng.gen_range(0..3),
        flip_cmp: rng.gen_bool(0.5),
        redundant: rng.gen_bool(0.4),
        swap_phis: rng.gen_bool(0.5),
    }
}

/// Generate the corpus: `spec.problems` problems named "1", "2", ...,
/// each with `spec.variants` files `v1.ll`, `v2.ll`, ... Two calls with the
/// same spec produce identical bytes, and variants of one problem never
/// repeat text.
pub fn generate_corpus(spec: SynthSpec) -> Vec<SynthSnippet> {
    let n_problems = spec.problems.min(TEMPLATES.len());
    let mut out = Vec::new();
    for (p, template) in TEMPLATES.iter().enumerate().take(n_problems) {
        let mut seen = BTreeSet::new();
        for v in 0..spec.variants {
            let mut text = String::new();
            for salt in 0..64 {
                text = template(&style_for(spec.seed, p, v, salt));
                if seen.insert(text.clone()) {
                    break;
                }
            }
            out.push(SynthSnippet {
                problem: format!("{}", p + 1),
                file: format!("v{}.ll", v + 1),
                text,
            });
        }
    }
    out
}

/// Write the corpus under `root` as `<root>/<problem>/<file>`. Returns the
/// number of files written.
pub fn write_corpus(root: &Path, spec: SynthSpec) -> io::Result<usize> {
    let snippets = generate_corpus(spec);
    for s in &snippets {
        let dir = root.join(&s.problem);
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join(&s.file), &s.text)?;
    }
    Ok(snippets.len())
}
