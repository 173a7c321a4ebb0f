//! Number formatting and plain-text grid layout shared by tables and plots.

/// Six significant digits. Magnitudes below 1e-4 or at least 1e6 switch to
/// scientific notation with a two-digit exponent, e.g. `8.10000e-05`.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let a = x.abs();
    if !(1e-4..1e6).contains(&a) {
        return fmt_sci(x, 5);
    }
    let decimals = (5 - a.log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Scientific notation with `decimals` mantissa digits and a signed,
/// zero-padded exponent.
pub fn fmt_sci(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Integer with comma thousands separators.
pub fn fmt_count(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

pub fn fmt_fixed(x: f64, decimals: usize) -> String {
    format!("{x:.decimals$}")
}

pub(crate) enum GridLine {
    Cells(Vec<String>),
    Rule(char),
}

/// Lays out rows with the first column left-aligned and the rest
/// right-aligned. Widths count chars, not bytes.
pub(crate) fn render_grid(lines: &[GridLine]) -> String {
    let n_cols = lines
        .iter()
        .filter_map(|l| match l {
            GridLine::Cells(c) => Some(c.len()),
            GridLine::Rule(_) => None,
        })
        .max()
        .unwrap_or(0);
    let mut widths = vec![0usize; n_cols];
    for line in lines {
        if let GridLine::Cells(cells) = line {
            for (w, c) in widths.iter_mut().zip(cells) {
                *w = (*w).max(c.chars().count());
            }
        }
    }
    let gap = 2;
    let total = widths.iter().sum::<usize>() + gap * n_cols.saturating_sub(1);
    let mut out = String::new();
    for line in lines {
        match line {
            GridLine::Rule(ch) => out.extend(std::iter::repeat_n(*ch, total)),
            GridLine::Cells(cells) => {
                let mut row = String::new();
                for (j, w) in widths.iter().enumerate() {
                    let cell = cells.get(j).map(String::as_str).unwrap_or("");
                    let pad = w - cell.chars().count();
                    if j == 0 {
                        row.push_str(cell);
                        row.extend(std::iter::repeat_n(' ', pad));
                    } else {
                        row.extend(std::iter::repeat_n(' ', gap + pad));
                        row.push_str(cell);
                    }
                }
                out.push_str(row.trim_end());
            }
        }
        out.push('\n');
    }
    out
}
