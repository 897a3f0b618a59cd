from tmbinomial.main import main


main()
