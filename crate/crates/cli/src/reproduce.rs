//! Regenerates the reference tables and diffs them against bundled values.

use crate::table::{fixed, sig6, Table};
use crate::CliError;
use fgm_core::aggregate_me::{aggregate, AggregateME, AggregateOptions};
use fgm_core::allocation::Allocator;
use fgm_core::bernoulli::BernoulliScheme;
use fgm_core::discrete_agg::{aggregate_discretized, DiscretizationSpec, Method};
use fgm_core::marginals::{Discrete, Marginal, Truncation};
use fgm_core::portfolio::Portfolio;
use fgm_core::presets::{lognormal_trio, six_risk_marginals};
use std::collections::HashMap;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TableId {
    Table1,
    Table2,
    Table3,
    Table4,
    Table5,
}

impl TableId {
    pub fn name(self) -> &'static str {
        match self {
            TableId::Table1 => "table1",
            TableId::Table2 => "table2",
            TableId::Table3 => "table3",
            TableId::Table4 => "table4",
            TableId::Table5 => "table5",
        }
    }

    fn bundled(self) -> &'static str {
        match self {
            TableId::Table1 => include_str!("../references/table1.csv"),
            TableId::Table2 => include_str!("../references/table2.csv"),
            TableId::Table3 => include_str!("../references/table3.csv"),
            TableId::Table4 => include_str!("../references/table4.csv"),
            TableId::Table5 => include_str!("../references/table5.csv"),
        }
    }

    /// Absolute tolerance matching the printed precision.
    pub fn tolerance(self) -> f64 {
        match self {
            TableId::Table2 => 0.01,
            TableId::Table4 => 1e-5,
            _ => 0.005,
        }
    }

    fn decimals(self) -> usize {
        if self == TableId::Table4 {
            6
        } else {
            2
        }
    }
}

/// Reference rows: named key fields plus the printed value.
#[derive(Debug, Clone)]
pub struct Reference {
    pub fields: Vec<String>,
    pub rows: Vec<(Vec<String>, f64)>,
}

impl Reference {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers: Vec<String> = r.headers().map_err(ref_err)?.iter().map(String::from).collect();
        if headers.last().map(String::as_str) != Some("value") {
            return Err(CliError::Config("reference: last column must be `value`".into()));
        }
        let fields = headers[..headers.len() - 1].to_vec();
        let mut rows = Vec::new();
        for (n, rec) in r.records().enumerate() {
            let rec = rec.map_err(ref_err)?;
            let key: Vec<String> = rec.iter().take(fields.len()).map(String::from).collect();
            let value = rec
                .get(fields.len())
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| CliError::Config(format!("reference row {}: bad value", n + 1)))?;
            rows.push((key, value));
        }
        Ok(Self { fields, rows })
    }

    fn field(&self, key: &[String], name: &str) -> Result<String, CliError> {
        self.fields
            .iter()
            .position(|f| f == name)
            .map(|i| key[i].clone())
            .ok_or_else(|| CliError::Config(format!("reference: missing column `{name}`")))
    }

    /// Keeps rows whose `field` is one of the listed values (`d=1,2,10`).
    fn restrict(&mut self, subset: &str) -> Result<(), CliError> {
        let (name, values) = subset
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("subset `{subset}`: expected FIELD=V1,V2,...")))?;
        let i = self
            .fields
            .iter()
            .position(|f| f == name.trim())
            .ok_or_else(|| CliError::Config(format!("subset: unknown field `{name}`, have {:?}", self.fields)))?;
        let wanted: Vec<&str> = values.split(',').map(str::trim).collect();
        self.rows.retain(|(k, _)| wanted.contains(&k[i].as_str()));
        if self.rows.is_empty() {
            return Err(CliError::Config(format!("subset `{subset}` selects no rows")));
        }
        Ok(())
    }
}

fn ref_err(e: csv::Error) -> CliError {
    CliError::Config(format!("reference: {e}"))
}

fn num(s: &str) -> Result<f64, CliError> {
    s.parse().map_err(|_| CliError::Config(format!("reference: `{s}` is not a number")))
}

fn scheme(name: &str, d: usize) -> Result<BernoulliScheme, CliError> {
    Ok(match name {
        "END" => BernoulliScheme::end(d)?,
        "Ind" => BernoulliScheme::independent(d)?,
        "EPD" => BernoulliScheme::comonotone(d)?,
        other => return Err(CliError::Config(format!("reference: unknown scheme `{other}`"))),
    })
}

/// Lazily computed engines, one per distinct configuration in the rows.
#[derive(Default)]
struct Cache {
    exchangeable: HashMap<(usize, String), AggregateME>,
    lattice: HashMap<(String, u64), Discrete>,
    allocators: HashMap<String, Allocator>,
}

impl Cache {
    fn table1(&mut self, d: usize, name: &str, opts: AggregateOptions) -> Result<&AggregateME, CliError> {
        let key = (d, name.to_string());
        if !self.exchangeable.contains_key(&key) {
            let p = Portfolio::with_scheme(vec![Marginal::exponential(0.1)?; d], scheme(name, d)?)?;
            self.exchangeable.insert(key.clone(), aggregate(&p, opts)?);
        }
        Ok(&self.exchangeable[&key])
    }

    fn table2(&mut self, method: &str, h: f64, trunc: Truncation) -> Result<&Discrete, CliError> {
        let key = (method.to_string(), h.to_bits());
        if !self.lattice.contains_key(&key) {
            let p = Portfolio::with_scheme(lognormal_trio()?, BernoulliScheme::markov(3, 0.5)?)?;
            let spec = DiscretizationSpec { method: method.parse::<Method>()?, span: h };
            self.lattice.insert(key.clone(), aggregate_discretized(&p, spec, trunc)?);
        }
        Ok(&self.lattice[&key])
    }

    fn allocator(&mut self, name: &str, opts: AggregateOptions) -> Result<&Allocator, CliError> {
        if !self.allocators.contains_key(name) {
            let p = Portfolio::with_scheme(six_risk_marginals()?, scheme(name, 6)?)?;
            self.allocators.insert(name.to_string(), Allocator::new(&p, opts)?);
        }
        Ok(&self.allocators[name])
    }
}

fn risk_index(s: &str) -> Result<usize, CliError> {
    let k: usize = s.parse().map_err(|_| CliError::Config(format!("reference: bad risk `{s}`")))?;
    if !(1..=6).contains(&k) {
        return Err(CliError::Config(format!("reference: risk {k} out of range")));
    }
    Ok(k - 1)
}

fn compute(id: TableId, r: &Reference, key: &[String], cache: &mut Cache, opts: AggregateOptions) -> Result<f64, CliError> {
    let f = |name: &str| r.field(key, name);
    match id {
        TableId::Table1 => {
            let d = num(&f("d")?)? as usize;
            let kappa = num(&f("kappa")?)?;
            let agg = cache.table1(d, &f("scheme")?, opts)?;
            let v = match f("measure")?.as_str() {
                "VaR" => agg.var_risk(kappa)?,
                "TVaR" => agg.tvar(kappa)?,
                other => return Err(CliError::Config(format!("reference: unknown measure `{other}`"))),
            };
            Ok(v / d as f64)
        }
        TableId::Table2 => {
            let pmf = cache.table2(&f("method")?, num(&f("h")?)?, opts.trunc)?;
            Ok(pmf.tvar(num(&f("kappa")?)?)?)
        }
        TableId::Table3 => {
            let m = six_risk_marginals()?[risk_index(&f("risk")?)?].clone();
            let me = m.as_mixed_erlang().expect("preset risks are mixed Erlang");
            match f("quantity")?.as_str() {
                "mean" => Ok(me.mean()),
                "variance" => Ok(me.variance()),
                q => match q.split_once('_') {
                    Some(("var", k)) => Ok(me.var(num(k)?)?),
                    Some(("tvar", k)) => Ok(me.tvar(num(k)?)?),
                    _ => Err(CliError::Config(format!("reference: unknown quantity `{q}`"))),
                },
            }
        }
        TableId::Table4 => {
            let s = num(&f("s")?)?;
            let k = risk_index(&f("risk")?)?;
            Ok(cache.allocator(&f("scheme")?, opts)?.cmrs(s)?.contributions[k])
        }
        TableId::Table5 => {
            let a = cache.allocator(&f("scheme")?, opts)?;
            let q = f("quantity")?;
            match q.split_once('_') {
                None if q == "variance" => Ok(a.aggregate().variance()),
                Some(("var", k)) => Ok(a.aggregate().var(num(k)?)?),
                Some(("tvar", k)) => Ok(a.aggregate().tvar(num(k)?)?),
                Some(("contribution", k)) => Ok(a.tvar_allocation(0.99)?.contributions[risk_index(k)?]),
                _ => Err(CliError::Config(format!("reference: unknown quantity `{q}`"))),
            }
        }
    }
}

#[derive(Debug)]
pub struct Reproduction {
    pub table: Table,
    pub mismatches: usize,
    pub total: usize,
    pub max_diff: f64,
}

pub fn reproduce(
    id: TableId,
    subset: Option<&str>,
    reference: Option<&Path>,
    opts: AggregateOptions,
) -> Result<Reproduction, CliError> {
    let text = match reference {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        None => id.bundled().to_string(),
    };
    let mut r = Reference::parse(&text)?;
    if let Some(s) = subset {
        r.restrict(s)?;
    }
    let tol = id.tolerance();
    let mut table = Table::new(r.fields.iter().cloned().chain(["computed", "reference", "diff", "status"].map(String::from)));
    let mut cache = Cache::default();
    let (mut mismatches, mut max_diff) = (0, 0.0_f64);
    for (key, expected) in &r.rows {
        let got = compute(id, &r, key, &mut cache, opts)?;
        let diff = got - expected;
        max_diff = max_diff.max(diff.abs());
        let ok = diff.abs() <= tol;
        if !ok {
            mismatches += 1;
        }
        let mut row = key.clone();
        row.extend([fixed(got, id.decimals()), fixed(*expected, id.decimals()), sig6(diff), (if ok { "ok" } else { "MISMATCH" }).into()]);
        table.push(row);
    }
    Ok(Reproduction { table, mismatches, total: r.rows.len(), max_diff })
}
