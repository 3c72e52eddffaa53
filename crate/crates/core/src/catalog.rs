//! Fixed catalog of the 52 Tennessee Eastman process variables.
//!
//! Measured variables XMEAS(1..41) come first, followed by the manipulated
//! variables XMV(1..11). The reactor agitator speed (XMV(12)) is held constant
//! by the plant and is not part of the canonical schema.

use serde::Serialize;

/// Number of columns in the canonical schema.
pub const NUM_VARIABLES: usize = 52;
/// Number of measured (XMEAS) variables.
pub const NUM_MEASURED: usize = 41;
/// Number of manipulated (XMV) variables in the canonical schema.
pub const NUM_MANIPULATED: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum VariableKind {
    Measured,
    Manipulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VariableDescriptor {
    pub id: usize,
    pub tag: &'static str,
    /// CSV column name (`xmeas_7`, `xmv_3`, ...).
    pub column: &'static str,
    pub name: &'static str,
    pub unit: &'static str,
    pub kind: VariableKind,
}

macro_rules! var {
    ($id:expr, $tag:expr, $col:expr, $name:expr, $unit:expr, $kind:ident) => {
        VariableDescriptor {
            id: $id,
            tag: $tag,
            column: $col,
            name: $name,
            unit: $unit,
            kind: VariableKind::$kind,
        }
    };
}

static CATALOG: [VariableDescriptor; NUM_VARIABLES] = [
    var!(0, "XMEAS(1)", "xmeas_1", "A Feed", "kscmh", Measured),
    var!(1, "XMEAS(2)", "xmeas_2", "D Feed", "kg/hr", Measured),
    var!(2, "XMEAS(3)", "xmeas_3", "E Feed", "kg/hr", Measured),
    var!(3, "XMEAS(4)", "xmeas_4", "A and C Feed", "kscmh", Measured),
    var!(4, "XMEAS(5)", "xmeas_5", "Recycle Flow", "kscmh", Measured),
    var!(
        5,
        "XMEAS(6)",
        "xmeas_6",
        "Reactor Feed Rate",
        "kscmh",
        Measured
    ),
    var!(
        6,
        "XMEAS(7)",
        "xmeas_7",
        "Reactor Pressure",
        "kPa gauge",
        Measured
    ),
    var!(7, "XMEAS(8)", "xmeas_8", "Reactor Level", "%", Measured),
    var!(
        8,
        "XMEAS(9)",
        "xmeas_9",
        "Reactor Temperature",
        "deg C",
        Measured
    ),
    var!(9, "XMEAS(10)", "xmeas_10", "Purge Rate", "kscmh", Measured),
    var!(
        10,
        "XMEAS(11)",
        "xmeas_11",
        "Product Separator Temperature",
        "deg C",
        Measured
    ),
    var!(
        11,
        "XMEAS(12)",
        "xmeas_12",
        "Product Separator Level",
        "%",
        Measured
    ),
    var!(
        12,
        "XMEAS(13)",
        "xmeas_13",
        "Product Separator Pressure",
        "kPa gauge",
        Measured
    ),
    var!(
        13,
        "XMEAS(14)",
        "xmeas_14",
        "Product Separator Underflow",
        "m3/hr",
        Measured
    ),
    var!(14, "XMEAS(15)", "xmeas_15", "Stripper Level", "%", Measured),
    var!(
        15,
        "XMEAS(16)",
        "xmeas_16",
        "Stripper Pressure",
        "kPa gauge",
        Measured
    ),
    var!(
        16,
        "XMEAS(17)",
        "xmeas_17",
        "Stripper Underflow",
        "m3/hr",
        Measured
    ),
    var!(
        17,
        "XMEAS(18)",
        "xmeas_18",
        "Stripper Temperature",
        "deg C",
        Measured
    ),
    var!(
        18,
        "XMEAS(19)",
        "xmeas_19",
        "Stripper Steam Flow",
        "kg/hr",
        Measured
    ),
    var!(
        19,
        "XMEAS(20)",
        "xmeas_20",
        "Compressor Work",
        "kW",
        Measured
    ),
    var!(
        20,
        "XMEAS(21)",
        "xmeas_21",
        "Reactor Cooling Water Outlet Temperature",
        "deg C",
        Measured
    ),
    var!(
        21,
        "XMEAS(22)",
        "xmeas_22",
        "Separator Cooling Water Outlet Temperature",
        "deg C",
        Measured
    ),
    var!(
        22,
        "XMEAS(23)",
        "xmeas_23",
        "Component A to Reactor",
        "mol %",
        Measured
    ),
    var!(
        23,
        "XMEAS(24)",
        "xmeas_24",
        "Component B to Reactor",
        "mol %",
        Measured
    ),
    var!(
        24,
        "XMEAS(25)",
        "xmeas_25",
        "Component C to Reactor",
        "mol %",
        Measured
    ),
    var!(
        25,
        "XMEAS(26)",
        "xmeas_26",
        "Component D to Reactor",
        "mol %",
        Measured
    ),
    var!(
        26,
        "XMEAS(27)",
        "xmeas_27",
        "Component E to Reactor",
        "mol %",
        Measured
    ),
    var!(
        27,
        "XMEAS(28)",
        "xmeas_28",
        "Component F to Reactor",
        "mol %",
        Measured
    ),
    var!(
        28,
        "XMEAS(29)",
        "xmeas_29",
        "Component A in Purge",
        "mol %",
        Measured
    ),
    var!(
        29,
        "XMEAS(30)",
        "xmeas_30",
        "Component B in Purge",
        "mol %",
        Measured
    ),
    var!(
        30,
        "XMEAS(31)",
        "xmeas_31",
        "Component C in Purge",
        "mol %",
        Measured
    ),
    var!(
        31,
        "XMEAS(32)",
        "xmeas_32",
        "Component D in Purge",
        "mol %",
        Measured
    ),
    var!(
        32,
        "XMEAS(33)",
        "xmeas_33",
        "Component E in Purge",
        "mol %",
        Measured
    ),
    var!(
        33,
        "XMEAS(34)",
        "xmeas_34",
        "Component F in Purge",
        "mol %",
        Measured
    ),
    var!(
        34,
        "XMEAS(35)",
        "xmeas_35",
        "Component G in Purge",
        "mol %",
        Measured
    ),
    var!(
        35,
        "XMEAS(36)",
        "xmeas_36",
        "Component H in Purge",
        "mol %",
        Measured
    ),
    var!(
        36,
        "XMEAS(37)",
        "xmeas_37",
        "Component D in Product",
        "mol %",
        Measured
    ),
    var!(
        37,
        "XMEAS(38)",
        "xmeas_38",
        "Component E in Product",
        "mol %",
        Measured
    ),
    var!(
        38,
        "XMEAS(39)",
        "xmeas_39",
        "Component F in Product",
        "mol %",
        Measured
    ),
    var!(
        39,
        "XMEAS(40)",
        "xmeas_40",
        "Component G in Product",
        "mol %",
        Measured
    ),
    var!(
        40,
        "XMEAS(41)",
        "xmeas_41",
        "Component H in Product",
        "mol %",
        Measured
    ),
    var!(41, "XMV(1)", "xmv_1", "D Feed Load", "%", Manipulated),
    var!(42, "XMV(2)", "xmv_2", "E Feed Load", "%", Manipulated),
    var!(43, "XMV(3)", "xmv_3", "A Feed Load", "%", Manipulated),
    var!(44, "XMV(4)", "xmv_4", "A and C Feed Load", "%", Manipulated),
    var!(
        45,
        "XMV(5)",
        "xmv_5",
        "Compressor Recycle Valve",
        "%",
        Manipulated
    ),
    var!(46, "XMV(6)", "xmv_6", "Purge Valve", "%", Manipulated),
    var!(
        47,
        "XMV(7)",
        "xmv_7",
        "Separator Pot Liquid Flow",
        "%",
        Manipulated
    ),
    var!(
        48,
        "XMV(8)",
        "xmv_8",
        "Stripper Liquid Product Flow",
        "%",
        Manipulated
    ),
    var!(
        49,
        "XMV(9)",
        "xmv_9",
        "Stripper Steam Valve",
        "%",
        Manipulated
    ),
    var!(
        50,
        "XMV(10)",
        "xmv_10",
        "Reactor Cooling Water Flow",
        "%",
        Manipulated
    ),
    var!(
        51,
        "XMV(11)",
        "xmv_11",
        "Condenser Cooling Water Flow",
        "%",
        Manipulated
    ),
];

/// The full 52-entry catalog, ordered by id.
pub fn variable_catalog() -> &'static [VariableDescriptor] {
    &CATALOG
}

/// Descriptor for a variable id, if in range.
pub fn variable(id: usize) -> Option<&'static VariableDescriptor> {
    CATALOG.get(id)
}

/// Looks a variable up by its display name (exact match).
pub fn variable_by_name(name: &str) -> Option<&'static VariableDescriptor> {
    CATALOG.iter().find(|d| d.name == name)
}

/// Canonical CSV header, in column order.
pub fn csv_header() -> impl Iterator<Item = &'static str> {
    CATALOG.iter().map(|d| d.column)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn catalog_has_41_measured_then_11_manipulated() {
        let cat = variable_catalog();
        assert_eq!(cat.len(), NUM_VARIABLES);
        assert!(cat[..NUM_MEASURED]
            .iter()
            .all(|d| d.kind == VariableKind::Measured));
        assert!(cat[NUM_MEASURED..]
            .iter()
            .all(|d| d.kind == VariableKind::Manipulated));
        let manipulated = cat
            .iter()
            .filter(|d| d.kind == VariableKind::Manipulated)
            .count();
        assert_eq!(manipulated, NUM_MANIPULATED);
    }

    #[test]
    fn ids_contiguous_and_tags_unique() {
        let cat = variable_catalog();
        for (i, d) in cat.iter().enumerate() {
            assert_eq!(d.id, i);
        }
        let tags: HashSet<_> = cat.iter().map(|d| d.tag).collect();
        let cols: HashSet<_> = cat.iter().map(|d| d.column).collect();
        let names: HashSet<_> = cat.iter().map(|d| d.name).collect();
        assert_eq!(tags.len(), NUM_VARIABLES);
        assert_eq!(cols.len(), NUM_VARIABLES);
        assert_eq!(names.len(), NUM_VARIABLES);
    }

    #[test]
    fn reactor_pressure_at_index_6() {
        let d = variable(6).unwrap();
        assert_eq!(d.name, "Reactor Pressure");
        assert_eq!(d.kind, VariableKind::Measured);
        assert_eq!(d.tag, "XMEAS(7)");
    }

    #[test]
    fn published_names_resolve() {
        for name in [
            "Stripper Pressure",
            "A and C Feed",
            "Product Separator Pressure",
            "A and C Feed Load",
            "Compressor Work",
            "Component D in Purge",
            "Component D to Reactor",
            "Component F in Purge",
            "Stripper Steam Valve",
        ] {
            assert!(variable_by_name(name).is_some(), "{name}");
        }
        assert_eq!(variable_by_name("A and C Feed Load").unwrap().tag, "XMV(4)");
    }
}
