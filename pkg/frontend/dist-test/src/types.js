// Wire types mirroring the sandbox HTTP API.
export const ASSIGNABLE_USES = [
    "School",
    "Hospital",
    "Clinic",
    "Business",
    "Office",
    "Recreation",
    "Park",
    "GreenSpace",
];
// One palette for the whole app; matches the server's SVG renderer.
export const PALETTE = {
    School: "#f2a33c",
    Hospital: "#e05c5c",
    Clinic: "#f0868f",
    Business: "#c98bd9",
    Office: "#8d9be0",
    Recreation: "#69c5c9",
    Park: "#6fbf73",
    GreenSpace: "#a8d08d",
    Residential: "#d8d0c5",
    RetainedGreen: "#3e8948",
    unassigned: "#e8e8e8",
};
