from molcvae.cli import main

main()
